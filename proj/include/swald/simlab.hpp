#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "swald/bahadur.hpp"
#include "swald/closed_testing.hpp"
#include "swald/distributions.hpp"
#include "swald/error.hpp"
#include "swald/estimands.hpp"
#include "swald/intersection_tests.hpp"
#include "swald/parallel.hpp"
#include "swald/rng.hpp"

namespace swald {

struct StudyResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += columns[c];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += row[c];
      }
      out += '\n';
    }
    return out;
  }

  double value(std::size_t row, const std::string& column) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == column) return std::stod(rows.at(row).at(c));
    throw ConfigError("StudyResultTable: no column named " + column);
  }

  const std::string& cell(std::size_t row, const std::string& column) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == column) return rows.at(row).at(c);
    throw ConfigError("StudyResultTable: no column named " + column);
  }
};

namespace detail {

inline std::string fmt_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline std::string fmt_frac(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

inline double binom_se(double p, double n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
}

inline std::string weight_label(const Eigen::VectorXd& w) {
  std::string out;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (k) out += '|';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", w[k]);
    out += buf;
  }
  return out;
}

}  // namespace detail

// Record i consumes substream i, so the list is reproducible and can be
// generated in any order.
inline std::vector<TrialRecord> simulate_trial(const ScenarioConfig& cfg,
                                               std::uint64_t seed) {
  cfg.validate();
  std::vector<TrialRecord> data;
  data.reserve(std::size_t(cfg.n));
  for (long i = 0; i < cfg.n; ++i) {
    Rng rng(derive_seed(seed, std::uint64_t(i)));
    const int a = rng.bernoulli(0.5) ? 1 : 0;
    const double t = rng.exponential(cfg.lambda + cfg.trt_hazard * a);
    if (t <= cfg.tau) {
      data.push_back(TrialRecord::terminal(a, cfg.gamma));
    } else {
      const double y = cfg.mu + cfg.trt_score * a + cfg.sigma * rng.normal();
      data.push_back(TrialRecord::survivor(a, y));
    }
  }
  return data;
}

// (1-alpha) quantile of the equal-weights two-hypothesis null mixture.
// Rejection is for large statistics; the null survival function is strictly
// decreasing past zero, so bisection suffices.
inline double critical_value_two(double rho, double alpha) {
  if (std::fabs(rho) >= 1.0 - 1e-10)
    throw DegenerateCorrelationError("critical_value_two: |rho| too close to 1");
  if (!(alpha > 0.0 && alpha <= 0.5))
    throw ConfigError("critical_value_two: alpha must lie in (0, 0.5]");
  double lo = 0.0, hi = 10.0;
  while (sw_two_p_analytic(hi, rho) > alpha) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sw_two_p_analytic(mid, rho) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// z threshold q with P(max(U1,U2) >= q) = alpha under correlation rho.
inline double minp_critical_two(double rho, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("minp_critical_two: alpha in (0,1) required");
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (1.0 - bvn_cdf(mid, mid, rho) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Scale m of the alternative (m, s*m) at which the min-p test attains the
// target power; the sizing baseline for study 1.
inline double minp_sizing(double rho, double s, double q, double target_power) {
  if (!(target_power > 0.0 && target_power < 1.0))
    throw ConfigError("minp_sizing: target power in (0,1) required");
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double power = 1.0 - bvn_cdf(q - mid, q - s * mid, rho);
    (power < target_power ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Study1Config {
  std::vector<double> rho_grid = {-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75};
  std::vector<double> s_grid;  // default -1..1 step 0.05
  double alpha = 0.025;
  double target_power = 0.9;
  long replications = 10000;
  std::uint64_t seed = 0;

  Study1Config() {
    for (int k = 0; k <= 40; ++k) s_grid.push_back(-1.0 + 0.05 * k);
  }

  void validate() const {
    if (replications < 100) throw ConfigError("Study1Config: replications >= 100");
    for (double r : rho_grid)
      if (!(std::fabs(r) < 1.0))
        throw DegenerateCorrelationError("Study1Config: rho outside (-1,1)");
    for (double s : s_grid)
      if (!(s >= -1.0 && s <= 1.0)) throw ConfigError("Study1Config: s outside [-1,1]");
  }
};

// Power of the signed Wald test against the min-p baseline on standardized
// bivariate alternatives sized so min-p hits the target power.
inline StudyResultTable run_study1(const Study1Config& cfg, int threads = 0) {
  cfg.validate();
  StudyResultTable table;
  table.columns = {"rho",      "s",      "effect_scale", "sw_critical", "minp_critical",
                   "sw_power", "sw_se",  "minp_power",   "minp_se",     "replications"};
  const long reps = cfg.replications;
  std::size_t cell = 0;
  for (double rho : cfg.rho_grid) {
    const double c_sw = critical_value_two(rho, cfg.alpha);
    const double q = minp_critical_two(rho, cfg.alpha);
    const double cross = std::sqrt((1.0 - rho) * (1.0 + rho));
    for (double s : cfg.s_grid) {
      const double m = minp_sizing(rho, s, q, cfg.target_power);
      const std::uint64_t cell_seed = derive_seed(cfg.seed, cell++);
      std::vector<unsigned char> sw_rej(static_cast<std::size_t>(reps));
      std::vector<unsigned char> minp_rej(static_cast<std::size_t>(reps));
      parallel_for(std::size_t(reps), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
          Rng rng(derive_seed(cell_seed, r));
          const double g1 = rng.normal(), g2 = rng.normal();
          const double z1 = g1 + m;
          const double z2 = rho * g1 + cross * g2 + s * m;
          const double stat = sw_two_closed_form(std::max(z1, z2), std::min(z1, z2), rho);
          sw_rej[r] = stat > c_sw ? 1 : 0;
          minp_rej[r] = std::max(z1, z2) >= q ? 1 : 0;
        }
      });
      double sw_count = 0, minp_count = 0;
      for (std::size_t r = 0; r < std::size_t(reps); ++r) {
        sw_count += sw_rej[r];
        minp_count += minp_rej[r];
      }
      const double sw_power = sw_count / double(reps);
      const double minp_power = minp_count / double(reps);
      table.rows.push_back({detail::fmt_num(rho), detail::fmt_num(s), detail::fmt_num(m),
                            detail::fmt_num(c_sw), detail::fmt_num(q),
                            detail::fmt_frac(sw_power),
                            detail::fmt_frac(detail::binom_se(sw_power, double(reps))),
                            detail::fmt_frac(minp_power),
                            detail::fmt_frac(detail::binom_se(minp_power, double(reps))),
                            std::to_string(reps)});
    }
  }
  return table;
}

// Type-1 error of the intersection tests under the global null: both
// treatment effects are zeroed, which makes every contrast exactly null
// whatever the penalty score.
inline StudyResultTable run_study2(const std::vector<ScenarioConfig>& scenarios,
                                   const std::vector<Eigen::VectorXd>& weight_sets,
                                   long replications, long mc_draws, double alpha,
                                   std::uint64_t seed, int threads = 0) {
  if (scenarios.empty() || replications <= 0)
    throw EmptyExperimentError("run_study2: no scenarios or no replications");
  if (weight_sets.empty()) throw EmptyExperimentError("run_study2: no weight sets");

  const std::vector<std::uint32_t> masks = {0x7, 0x3, 0x5, 0x6};  // triple, then pairs
  StudyResultTable table;
  table.columns = {"n",      "mu",        "lambda", "weights",      "subset",
                   "type1",  "std_error", "replications"};

  std::size_t cell = 0;
  for (const ScenarioConfig& base : scenarios) {
    ScenarioConfig cfg = base;
    cfg.trt_hazard = 0.0;
    cfg.trt_score = 0.0;
    cfg.validate();
    for (const Eigen::VectorXd& w : weight_sets) {
      if (w.size() != 3) throw ConfigError("run_study2: weight sets must have length 3");
      const std::uint64_t cell_seed = derive_seed(seed, cell++);
      // rejection indicators, draw-indexed: [rep][mask position]
      std::vector<unsigned char> rej(std::size_t(replications) * masks.size(), 0);
      parallel_for(std::size_t(replications), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
          const std::uint64_t rep_seed = derive_seed(cell_seed, r);
          const EstimateSet est = landmark_estimates(
              simulate_trial(cfg, derive_seed(rep_seed, 0)), cfg.gamma);
          for (std::size_t k = 0; k < masks.size(); ++k) {
            const std::vector<int> idx = subset_indices(masks[k]);
            const EstimateSet sub = est.subset(idx);
            const HypothesisSpec spec(Eigen::VectorXd::Zero(Eigen::Index(idx.size())),
                                      subset_weights(w, idx), alpha);
            const McConfig mc(mc_draws, derive_seed(rep_seed, masks[k]));
            const TestResult res = sw_test(sub, spec, mc, false, 1);
            rej[r * masks.size() + k] = res.p_value <= alpha ? 1 : 0;
          }
        }
      });
      for (std::size_t k = 0; k < masks.size(); ++k) {
        double count = 0;
        for (std::size_t r = 0; r < std::size_t(replications); ++r)
          count += rej[r * masks.size() + k];
        const double frac = count / double(replications);
        table.rows.push_back({std::to_string(cfg.n), detail::fmt_num(cfg.mu),
                              detail::fmt_num(cfg.lambda), detail::weight_label(w),
                              subset_key(masks[k]), detail::fmt_frac(frac),
                              detail::fmt_frac(detail::binom_se(frac, double(replications))),
                              std::to_string(replications)});
      }
    }
  }
  return table;
}

enum class Strategy { sw_equal, sw_weighted, minp };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::sw_equal: return "sw_equal";
    case Strategy::sw_weighted: return "sw_weighted";
    case Strategy::minp: return "minp";
  }
  return "unknown";
}

// Closed-testing power: per subset S, the fraction of replications whose
// rejection set contains all of S. Supersets can never beat subsets here by
// construction.
inline StudyResultTable run_study3(const ScenarioConfig& base, const std::vector<long>& n_grid,
                                   const std::vector<Strategy>& strategies, long replications,
                                   long mc_draws, double alpha, std::uint64_t seed,
                                   int threads = 0) {
  if (n_grid.empty() || strategies.empty() || replications <= 0)
    throw EmptyExperimentError("run_study3: empty grid, strategies, or replications");

  const std::vector<std::uint32_t> subsets = {0x1, 0x2, 0x4, 0x3, 0x5, 0x6, 0x7};
  const Eigen::VectorXd w_equal = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  Eigen::VectorXd w_up(3);
  w_up << 0.2, 0.4, 0.4;

  StudyResultTable table;
  table.columns = {"n", "strategy", "subset", "power", "std_error", "replications"};

  std::size_t cell = 0;
  for (long n : n_grid) {
    ScenarioConfig cfg = base;
    cfg.n = n;
    cfg.validate();
    const std::uint64_t n_seed = derive_seed(seed, cell++);
    // counts[strategy][subset] assembled from per-rep indicator rows
    std::vector<unsigned char> hits(std::size_t(replications) * strategies.size() * subsets.size(), 0);
    parallel_for(std::size_t(replications), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t r = lo; r < hi; ++r) {
        const std::uint64_t rep_seed = derive_seed(n_seed, r);
        const EstimateSet est = landmark_estimates(
            simulate_trial(cfg, derive_seed(rep_seed, 0)), cfg.gamma);
        const Eigen::VectorXd deltas = Eigen::VectorXd::Zero(3);
        for (std::size_t si = 0; si < strategies.size(); ++si) {
          const Strategy strat = strategies[si];
          const Eigen::VectorXd& w = strat == Strategy::sw_weighted ? w_up : w_equal;
          const ClosureMethod method =
              strat == Strategy::minp ? ClosureMethod::minp : ClosureMethod::sw;
          const McConfig mc(mc_draws, derive_seed(rep_seed, 1 + si));
          const ClosedTestReport report =
              closed_testing(est, deltas, w, alpha, mc, method, 1);
          for (std::size_t k = 0; k < subsets.size(); ++k)
            hits[(r * strategies.size() + si) * subsets.size() + k] =
                report.rejects_all(subset_indices(subsets[k])) ? 1 : 0;
        }
      }
    });
    for (std::size_t si = 0; si < strategies.size(); ++si)
      for (std::size_t k = 0; k < subsets.size(); ++k) {
        double count = 0;
        for (std::size_t r = 0; r < std::size_t(replications); ++r)
          count += hits[(r * strategies.size() + si) * subsets.size() + k];
        const double frac = count / double(replications);
        table.rows.push_back({std::to_string(n), strategy_name(strategies[si]),
                              subset_key(subsets[k]), detail::fmt_frac(frac),
                              detail::fmt_frac(detail::binom_se(frac, double(replications))),
                              std::to_string(replications)});
      }
  }
  return table;
}

// Efficiency-ratio grid for plotting.
inline StudyResultTable bahadur_grid(const std::vector<double>& rho_grid,
                                     const std::vector<double>& s_grid, double z_max = 1.0) {
  StudyResultTable table;
  table.columns = {"rho", "s", "z_max", "z_min", "slope_sw", "slope_minp", "ratio", "ratio_cap"};
  for (double rho : rho_grid)
    for (double s : s_grid) {
      const BahadurPoint pt(z_max, s * z_max, rho);
      table.rows.push_back({detail::fmt_num(rho), detail::fmt_num(s),
                            detail::fmt_num(pt.z_max), detail::fmt_num(pt.z_min),
                            detail::fmt_num(slope_sw(pt)), detail::fmt_num(slope_minp(pt)),
                            detail::fmt_num(efficiency_ratio(pt)),
                            detail::fmt_num(2.0 / (1.0 + rho))});
    }
  return table;
}

}  // namespace swald
