#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "swald/error.hpp"
#include "swald/estimands.hpp"
#include "swald/intersection_tests.hpp"
#include "swald/rng.hpp"

namespace swald {

enum class ClosureMethod { sw, minp };

inline std::vector<int> subset_indices(std::uint32_t mask) {
  std::vector<int> idx;
  for (int j = 0; mask; ++j, mask >>= 1)
    if (mask & 1u) idx.push_back(j);
  return idx;
}

inline std::string subset_key(std::uint32_t mask) {
  std::string key;
  for (int index : subset_indices(mask)) {
    if (!key.empty()) key += ',';
    key += std::to_string(index + 1);
  }
  return key;
}

// Each subset's Monte-Carlo run has its own derived stream, so p-values are
// independent across subsets and the report is reproducible as a whole.
inline std::uint64_t subset_seed(std::uint64_t master, std::uint32_t mask) {
  return derive_seed(master, mask);
}

inline Eigen::VectorXd subset_weights(const Eigen::VectorXd& global_w,
                                      const std::vector<int>& subset) {
  if (subset.empty()) throw EmptySubsetError("subset_weights: empty subset");
  if (global_w.minCoeff() <= 0.0)
    throw ConfigError("subset_weights: weights must be strictly positive");
  Eigen::VectorXd w(Eigen::Index(subset.size()));
  for (Eigen::Index a = 0; a < w.size(); ++a) {
    if (subset[a] < 0 || subset[a] >= global_w.size())
      throw DimensionMismatchError("subset_weights: index out of range");
    w[a] = global_w[subset[a]];
  }
  return w / w.sum();
}

struct ClosedTestReport {
  Eigen::Index j = 0;
  double alpha = 0.025;
  ClosureMethod method = ClosureMethod::sw;
  std::vector<std::string> names;
  std::map<std::uint32_t, TestResult> subset_results;
  Eigen::VectorXd adjusted_p;
  std::vector<bool> rejected;
  bool consonant = true;

  bool rejects_all(const std::vector<int>& subset) const {
    for (int index : subset)
      if (!rejected[std::size_t(index)]) return false;
    return true;
  }
};

namespace detail {

inline TestResult singleton_sw_result(const EstimateSet& est, double delta) {
  TestResult res;
  const double var = est.sigma_hat()(0, 0);
  if (var <= 0.0) throw ZeroVarianceError("closed_testing: zero variance");
  const double z =
      std::sqrt(double(est.n())) * (est.theta_hat()[0] - delta) / std::sqrt(var);
  res.statistic = z > 0.0 ? z * z : 0.0;
  res.p_value = normal_sf(z);
  res.method = Method::marginal;
  return res;
}

}  // namespace detail

// Full closure over all non-empty subsets; no shortcut exists for this test
// family, so every one of the 2^J - 1 intersections is evaluated.
inline ClosedTestReport closed_testing(const EstimateSet& est, const Eigen::VectorXd& deltas,
                                       const Eigen::VectorXd& global_w, double alpha,
                                       const McConfig& mc, ClosureMethod method,
                                       int threads = 0) {
  const Eigen::Index j = est.size();
  if (j > 20) throw TooManyHypothesesError("closed_testing: more than 20 hypotheses");
  if (deltas.size() != j || global_w.size() != j)
    throw DimensionMismatchError("closed_testing: deltas/weights length");

  ClosedTestReport report;
  report.j = j;
  report.alpha = alpha;
  report.method = method;
  report.names = est.names();

  const std::uint32_t full = (std::uint32_t(1) << j) - 1;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const std::vector<int> idx = subset_indices(mask);
    const EstimateSet sub = est.subset(idx);
    Eigen::VectorXd sub_deltas(Eigen::Index(idx.size()));
    for (Eigen::Index a = 0; a < sub_deltas.size(); ++a) sub_deltas[a] = deltas[idx[a]];
    const Eigen::VectorXd sub_w = subset_weights(global_w, idx);

    TestResult res;
    if (idx.size() == 1) {
      res = detail::singleton_sw_result(sub, sub_deltas[0]);
      if (method == ClosureMethod::minp) res.statistic = res.p_value;
    } else {
      const HypothesisSpec spec(sub_deltas, sub_w, alpha);
      const McConfig sub_mc(mc.draws, subset_seed(mc.seed, mask));
      if (method == ClosureMethod::sw)
        res = sw_test(sub, spec, sub_mc, false, threads);
      else
        res = minp_test(sub, spec, sub_mc, MinpMode::joint, threads);
    }
    report.subset_results.emplace(mask, res);
  }

  report.adjusted_p = Eigen::VectorXd::Zero(j);
  for (const auto& [mask, res] : report.subset_results)
    for (int index : subset_indices(mask))
      report.adjusted_p[index] = std::max(report.adjusted_p[index], res.p_value);

  report.rejected.resize(std::size_t(j));
  for (Eigen::Index k = 0; k < j; ++k)
    report.rejected[std::size_t(k)] = report.adjusted_p[k] <= alpha;

  // Consonance: every rejected intersection must contain at least one
  // hypothesis that the closure rejects outright. Diagnosed, never enforced.
  report.consonant = true;
  for (const auto& [mask, res] : report.subset_results) {
    if (res.p_value > alpha) continue;
    bool witness = false;
    for (int index : subset_indices(mask))
      if (report.rejected[std::size_t(index)]) {
        witness = true;
        break;
      }
    if (!witness) {
      report.consonant = false;
      break;
    }
  }
  return report;
}

inline bool fwer_check(const ClosedTestReport& report, const std::vector<int>& true_nulls) {
  for (int index : true_nulls)
    if (index >= 0 && index < int(report.rejected.size()) &&
        report.rejected[std::size_t(index)])
      return false;
  return true;
}

}  // namespace swald
