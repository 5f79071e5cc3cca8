#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swald/error.hpp"
#include "swald/linalg.hpp"

namespace swald {

// sigma_hat/n cancellation: n (theta_hat - theta)' (sigma_hat)^-1 (theta_hat - theta)
// equals (theta_hat - theta)' (sigma_hat/n)^-1 (theta_hat - theta), so every test
// routes through per_estimate_cov().
class EstimateSet {
 public:
  EstimateSet(long n, Eigen::VectorXd theta_hat, SymMatrix sigma_hat,
              std::optional<Eigen::MatrixXd> influence = std::nullopt,
              std::vector<std::string> names = {})
      : n_(n),
        theta_hat_(std::move(theta_hat)),
        sigma_hat_(std::move(sigma_hat)),
        influence_(std::move(influence)),
        names_(std::move(names)) {
    if (n_ < 1) throw ConfigError("EstimateSet: n must be positive");
    if (theta_hat_.size() != sigma_hat_.dim())
      throw DimensionMismatchError("EstimateSet: theta_hat and sigma_hat disagree");
    if (!theta_hat_.allFinite())
      throw NonFiniteInputError("EstimateSet: non-finite estimate");
    require_psd(sigma_hat_);
    if (influence_) {
      if (influence_->cols() != theta_hat_.size() || influence_->rows() != n_)
        throw DimensionMismatchError("EstimateSet: influence matrix shape");
      const Eigen::MatrixXd implied = influence_->transpose() * (*influence_) / double(n_);
      const double scale = std::max(1.0, sigma_hat_.mat().cwiseAbs().maxCoeff());
      if ((implied - sigma_hat_.mat()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ConfigError("EstimateSet: sigma_hat inconsistent with influence matrix");
    }
    if (names_.empty())
      for (Eigen::Index j = 0; j < theta_hat_.size(); ++j)
        names_.push_back("theta" + std::to_string(j + 1));
    if (Eigen::Index(names_.size()) != theta_hat_.size())
      throw DimensionMismatchError("EstimateSet: name count");
  }

  long n() const { return n_; }
  Eigen::Index size() const { return theta_hat_.size(); }
  const Eigen::VectorXd& theta_hat() const { return theta_hat_; }
  const SymMatrix& sigma_hat() const { return sigma_hat_; }
  const std::optional<Eigen::MatrixXd>& influence() const { return influence_; }
  const std::vector<std::string>& names() const { return names_; }

  // covariance of theta_hat itself
  SymMatrix per_estimate_cov() const {
    return SymMatrix(sigma_hat_.mat() / double(n_));
  }

  EstimateSet subset(const std::vector<int>& idx) const {
    if (idx.empty()) throw EmptySubsetError("EstimateSet::subset: empty index set");
    const Eigen::Index k = Eigen::Index(idx.size());
    Eigen::VectorXd th(k);
    Eigen::MatrixXd sg(k, k);
    std::vector<std::string> nm;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (idx[a] < 0 || idx[a] >= size())
        throw DimensionMismatchError("EstimateSet::subset: index out of range");
      th[a] = theta_hat_[idx[a]];
      nm.push_back(names_[idx[a]]);
      for (Eigen::Index b = 0; b < k; ++b) sg(a, b) = sigma_hat_(idx[a], idx[b]);
    }
    std::optional<Eigen::MatrixXd> infl;
    if (influence_) {
      infl.emplace(n_, k);
      for (Eigen::Index a = 0; a < k; ++a) infl->col(a) = influence_->col(idx[a]);
    }
    return EstimateSet(n_, th, SymMatrix(sg), infl, nm);
  }

 private:
  long n_;
  Eigen::VectorXd theta_hat_;
  SymMatrix sigma_hat_;
  std::optional<Eigen::MatrixXd> influence_;
  std::vector<std::string> names_;
};

inline SymMatrix stack_covariance(const Eigen::MatrixXd& influence) {
  if (influence.rows() < 2) throw TooFewRowsError("stack_covariance: need n >= 2");
  if (!influence.allFinite())
    throw NonFiniteInputError("stack_covariance: non-finite influence value");
  return SymMatrix(influence.transpose() * influence / double(influence.rows()));
}

struct TrialRecord {
  int a = 0;       // treatment arm
  int r = 0;       // terminal event before the landmark
  double y = 0.0;  // score, defined only when r == 0
  double y_tilde = 0.0;

  static TrialRecord survivor(int arm, double score) {
    return TrialRecord{arm, 0, score, score};
  }
  static TrialRecord terminal(int arm, double gamma) {
    // y is a sentinel; estimator code must never read it when r == 1
    return TrialRecord{arm, 1, std::numeric_limits<double>::quiet_NaN(), gamma};
  }
};

struct ScenarioConfig {
  long n = 0;
  double mu = 0.0;
  double sigma = 1.0;
  double lambda = 0.0;
  double tau = 0.0;
  double gamma = 0.0;
  double trt_hazard = 0.0;  // hazard shift in the treated arm
  double trt_score = 0.0;   // score mean shift among survivors
  Eigen::VectorXd weights;

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("ScenarioConfig: lambda must be positive");
    if (!(lambda + trt_hazard > 0.0))
      throw ConfigError("ScenarioConfig: treated-arm hazard must be positive");
    if (!(sigma > 0.0)) throw ConfigError("ScenarioConfig: sigma must be positive");
    if (n < 2) throw ConfigError("ScenarioConfig: n must be at least 2");
    if (!(tau > 0.0)) throw ConfigError("ScenarioConfig: tau must be positive");
  }
};

// Difference-of-ratio estimators at the landmark, with influence functions
// built from empirical plug-ins so every influence column is exactly mean
// zero up to rounding.
inline EstimateSet landmark_estimates(const std::vector<TrialRecord>& data, double gamma) {
  const long n = long(data.size());
  if (n < 2) throw TooFewRowsError("landmark_estimates: need at least 2 records");

  long count_arm[2] = {0, 0};      // n_a
  long count_surv[2] = {0, 0};     // survivors per arm
  double sum_y_surv[2] = {0, 0};   // sum of y over survivors per arm
  double sum_ytilde[2] = {0, 0};   // sum of composite score per arm
  for (const TrialRecord& z : data) {
    const int a = z.a ? 1 : 0;
    if (z.r ? (z.y_tilde != gamma) : (z.y_tilde != z.y))
      throw ConfigError("landmark_estimates: y_tilde violates the composite-score rule");
    ++count_arm[a];
    sum_ytilde[a] += z.y_tilde;
    if (!z.r) {
      ++count_surv[a];
      sum_y_surv[a] += z.y;
    }
  }
  if (count_arm[0] == 0 || count_arm[1] == 0)
    throw EmptyArmError("landmark_estimates: an arm has no records");
  if (count_surv[0] == 0 || count_surv[1] == 0)
    throw NoSurvivorsError("landmark_estimates: an arm has no survivor records");

  // empirical plug-ins, all with denominator n
  double p_arm[2], p_surv[2], m_surv[2], m_tilde[2];
  for (int a = 0; a < 2; ++a) {
    p_arm[a] = double(count_arm[a]) / double(n);
    p_surv[a] = double(count_surv[a]) / double(n);
    m_surv[a] = sum_y_surv[a] / double(count_surv[a]);
    m_tilde[a] = sum_ytilde[a] / double(count_arm[a]);
  }

  Eigen::VectorXd theta(3);
  theta[0] = double(count_surv[1]) / double(count_arm[1]) -
             double(count_surv[0]) / double(count_arm[0]);
  theta[1] = m_surv[1] - m_surv[0];
  theta[2] = m_tilde[1] - m_tilde[0];

  Eigen::MatrixXd infl(n, 3);
  for (long i = 0; i < n; ++i) {
    const TrialRecord& z = data[i];
    const int a = z.a ? 1 : 0;
    const double sign = a ? 1.0 : -1.0;
    const double surv = z.r ? 0.0 : 1.0;
    const double q = p_surv[a] / p_arm[a];  // P(R=0 | A=a) plug-in
    infl(i, 0) = sign * (surv - q) / p_arm[a];
    infl(i, 1) = z.r ? 0.0 : sign * (z.y - m_surv[a]) / p_surv[a];
    infl(i, 2) = sign * (z.y_tilde - m_tilde[a]) / p_arm[a];
  }

  return EstimateSet(n, theta, stack_covariance(infl), infl,
                     {"theta1", "theta2", "theta3"});
}

// Population covariance of the stacked influence functions under the
// trial-generating mechanism, P(A=a) = 1/2 per arm.
inline SymMatrix theoretical_sigma(const ScenarioConfig& cfg) {
  cfg.validate();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
  for (int a = 0; a < 2; ++a) {
    const double p_a = 0.5;
    const double surv = std::exp(-(cfg.lambda + cfg.trt_hazard * a) * cfg.tau);
    const double v_r = surv * (1.0 - surv);
    const double m = cfg.mu + cfg.trt_score * a;
    const double var_y = cfg.sigma * cfg.sigma;
    const double gap = m - cfg.gamma;
    s(0, 0) += v_r / p_a;
    s(1, 1) += var_y / (surv * p_a);
    s(2, 2) += (surv * var_y + v_r * gap * gap) / p_a;
    s(0, 2) += v_r * gap / p_a;
    s(1, 2) += var_y / p_a;
  }
  s(2, 0) = s(0, 2);
  s(2, 1) = s(1, 2);
  return SymMatrix(s);
}

}  // namespace swald
