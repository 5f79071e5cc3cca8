#pragma once

#include <stdexcept>
#include <string>

namespace swald {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// linalg
struct DimensionMismatchError : Error { using Error::Error; };
struct NotPsdError : Error { using Error::Error; };
struct SingularError : Error { using Error::Error; };
struct ZeroVarianceError : Error { using Error::Error; };

// estimands
struct NonFiniteInputError : Error { using Error::Error; };
struct TooFewRowsError : Error { using Error::Error; };
struct EmptyArmError : Error { using Error::Error; };
struct NoSurvivorsError : Error { using Error::Error; };

// cone
struct ZeroNormalError : Error { using Error::Error; };
struct NoConvergenceError : Error { using Error::Error; };
struct DegenerateCorrelationError : Error { using Error::Error; };

// tests / multtest
struct EmptySampleError : Error { using Error::Error; };
struct EmptySubsetError : Error { using Error::Error; };
struct TooManyHypothesesError : Error { using Error::Error; };

// bahadur / simlab
struct NullAlternativeError : Error { using Error::Error; };
struct EmptyExperimentError : Error { using Error::Error; };

// configuration and input plumbing
struct ConfigError : Error { using Error::Error; };

}  // namespace swald
