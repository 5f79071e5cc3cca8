#pragma once

#include "swald/bahadur.hpp"
#include "swald/closed_testing.hpp"
#include "swald/cone.hpp"
#include "swald/distributions.hpp"
#include "swald/error.hpp"
#include "swald/estimands.hpp"
#include "swald/intersection_tests.hpp"
#include "swald/io.hpp"
#include "swald/linalg.hpp"
#include "swald/parallel.hpp"
#include "swald/rng.hpp"
#include "swald/simlab.hpp"
