#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "swald/error.hpp"

namespace swald {

// Relative PSD tolerance: eigenvalues in (-tol_psd*lambda_max, 0] are treated
// as floating-point noise from influence-product accumulation.
inline constexpr double kTolPsd = 1e-12;

class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd m) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw DimensionMismatchError("SymMatrix: input must be square and non-empty");
    if (!m.allFinite())
      throw NonFiniteInputError("SymMatrix: non-finite entry");
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-6 * std::max(scale, 1e-300))
      throw DimensionMismatchError("SymMatrix: input is not symmetric");
    m_ = 0.5 * (m + m.transpose().eval());
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_of(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  if (es.info() != Eigen::Success)
    throw SingularError("eigendecomposition failed");
  return es;
}

}  // namespace detail

inline void require_psd(const SymMatrix& m) {
  const auto es = detail::eigen_of(m);
  const double lmax = es.eigenvalues().maxCoeff();
  if (es.eigenvalues().minCoeff() < -kTolPsd * std::max(lmax, 0.0))
    throw NotPsdError("matrix has a negative eigenvalue beyond tolerance");
}

// Symmetric (spectral) square root; the unique PSD root. Eigenvalues within
// tolerance below zero are clipped to 0.
inline SymMatrix sym_sqrt(const SymMatrix& m) {
  const auto es = detail::eigen_of(m);
  Eigen::VectorXd ev = es.eigenvalues();
  const double lmax = std::max(ev.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -kTolPsd * lmax)
      throw NotPsdError("sym_sqrt: matrix is not positive semidefinite");
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  return SymMatrix(v * ev.asDiagonal() * v.transpose());
}

inline SymMatrix sym_inv_sqrt(const SymMatrix& m) {
  const auto es = detail::eigen_of(m);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  if (ev.minCoeff() <= kTolPsd * std::max(lmax, 0.0))
    throw SingularError("sym_inv_sqrt: matrix is singular or indefinite");
  const Eigen::VectorXd inv_rt = ev.array().sqrt().inverse();
  const Eigen::MatrixXd& v = es.eigenvectors();
  return SymMatrix(v * inv_rt.asDiagonal() * v.transpose());
}

inline SymMatrix correlation(const SymMatrix& m) {
  const Eigen::VectorXd d = m.mat().diagonal();
  if (d.minCoeff() <= 0.0)
    throw ZeroVarianceError("correlation: non-positive diagonal entry");
  const Eigen::VectorXd inv_sd = d.array().sqrt().inverse();
  Eigen::MatrixXd r = inv_sd.asDiagonal() * m.mat() * inv_sd.asDiagonal();
  r.diagonal().setOnes();
  return SymMatrix(r.cwiseMax(-1.0).cwiseMin(1.0));
}

}  // namespace swald
