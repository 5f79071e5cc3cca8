#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "swald/error.hpp"
#include "swald/linalg.hpp"

namespace swald {

inline constexpr double kDykstraTol = 1e-10;
inline constexpr long kDykstraMaxCycles = 10000;
// Feasibility is judged looser than convergence: projections may sit on facets.
inline constexpr double kFeasTol = 1e-9;

// Intersection of half-spaces K_j = {u : a_j . u <= 0}, one per row.
struct ConeSpec {
  Eigen::MatrixXd normals;

  explicit ConeSpec(Eigen::MatrixXd rows) : normals(std::move(rows)) {
    if (normals.rows() == 0 || normals.cols() == 0)
      throw DimensionMismatchError("ConeSpec: empty normal set");
    for (Eigen::Index j = 0; j < normals.rows(); ++j)
      if (normals.row(j).norm() <= 0.0)
        throw ZeroNormalError("ConeSpec: zero normal");
  }

  static ConeSpec from_sqrt_covariance(const SymMatrix& sqrt_sigma) {
    return ConeSpec(sqrt_sigma.mat());
  }

  Eigen::Index dim() const { return normals.cols(); }
  Eigen::Index constraint_count() const { return normals.rows(); }

  bool contains(const Eigen::VectorXd& u, double tol) const {
    return (normals * u).maxCoeff() <= tol;
  }
};

inline Eigen::VectorXd project_halfspace(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& normal) {
  const double sq = normal.squaredNorm();
  if (sq <= 0.0) throw ZeroNormalError("project_halfspace: zero normal");
  const double viol = normal.dot(x);
  if (viol <= 0.0) return x;
  return x - (viol / sq) * normal;
}

struct DykstraResult {
  Eigen::VectorXd point;
  double sq_distance = 0.0;
  long cycles = 0;
  double last_displacement = 0.0;
};

// Cyclic projection with increment correction. Holds per-constraint
// increments and reusable buffers so repeated projections against one cone
// (the Monte-Carlo null path) avoid reallocation.
class ConeProjector {
 public:
  explicit ConeProjector(const ConeSpec& cone, double tol = kDykstraTol,
                         long max_cycles = kDykstraMaxCycles)
      : normals_(cone.normals),
        inv_sq_norms_(cone.normals.rows()),
        tol_(tol),
        max_cycles_(max_cycles),
        x_(cone.dim()),
        y_(cone.dim()),
        tmp_(cone.dim()),
        incr_(cone.dim(), cone.normals.rows()) {
    if (!(tol > 0.0)) throw ConfigError("ConeProjector: tol must be positive");
    for (Eigen::Index j = 0; j < normals_.rows(); ++j)
      inv_sq_norms_[j] = 1.0 / normals_.row(j).squaredNorm();
  }

  DykstraResult project(const Eigen::VectorXd& u_hat) {
    const Eigen::Index m = normals_.rows();
    if (u_hat.size() != normals_.cols())
      throw DimensionMismatchError("ConeProjector: dimension mismatch");
    const double stop = tol_ * std::max(1.0, u_hat.norm());
    x_ = u_hat;
    incr_.setZero();
    DykstraResult res;
    for (long cycle = 1; cycle <= max_cycles_; ++cycle) {
      double disp2 = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        y_ = x_ - incr_.col(j);  // back out the previous increment
        const double viol = normals_.row(j).dot(y_);
        double moved2;
        if (viol > 0.0) {
          const double step = viol * inv_sq_norms_[j];
          tmp_ = incr_.col(j) + step * normals_.row(j).transpose();
          moved2 = tmp_.squaredNorm();
          incr_.col(j) = -step * normals_.row(j).transpose();
          x_ = y_ + incr_.col(j);
        } else {
          moved2 = incr_.col(j).squaredNorm();
          x_ = y_;
          incr_.col(j).setZero();
        }
        disp2 = std::max(disp2, moved2);
      }
      res.cycles = cycle;
      res.last_displacement = std::sqrt(disp2);
      if (res.last_displacement < stop) {
        res.point = x_;
        res.sq_distance = (u_hat - x_).squaredNorm();
        return res;
      }
    }
    throw NoConvergenceError("dykstra_project: displacement above tolerance after max cycles");
  }

 private:
  Eigen::MatrixXd normals_;
  Eigen::VectorXd inv_sq_norms_;
  double tol_;
  long max_cycles_;
  Eigen::VectorXd x_, y_, tmp_;
  Eigen::MatrixXd incr_;
};

inline DykstraResult dykstra_project(const Eigen::VectorXd& u_hat, const ConeSpec& cone,
                                     double tol = kDykstraTol,
                                     long max_cycles = kDykstraMaxCycles) {
  ConeProjector projector(cone, tol, max_cycles);
  return projector.project(u_hat);
}

// Cyclic projection converges at a rate set by the smallest angle between
// facets; a nearly dependent normal set stalls it beyond any practical
// budget. Such cones are detected once per geometry and routed to an exact
// active-set enumeration (exponential in the facet count, so capped).
inline constexpr int kExactConeMaxFacets = 16;
inline constexpr double kDegenerateConeRatio = 1e-3;

inline bool cone_needs_exact_projection(const ConeSpec& cone) {
  if (cone.constraint_count() > kExactConeMaxFacets) return false;
  Eigen::MatrixXd unit = cone.normals;
  for (Eigen::Index j = 0; j < unit.rows(); ++j) unit.row(j) /= unit.row(j).norm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unit * unit.transpose());
  if (es.info() != Eigen::Success)
    throw SingularError("cone_needs_exact_projection: eigensolver failed");
  const Eigen::VectorXd& eigs = es.eigenvalues();
  return eigs(0) < kDegenerateConeRatio * eigs(eigs.size() - 1);
}

// Exact projection by enumerating candidate active sets. Every face of the
// cone is cut out by an independent subset of normals, so the true
// projection appears among the feasible candidates and wins on distance.
inline DykstraResult exact_cone_project(const Eigen::VectorXd& u_hat, const ConeSpec& cone) {
  const Eigen::MatrixXd& a = cone.normals;
  const int m = int(a.rows());
  if (u_hat.size() != a.cols())
    throw DimensionMismatchError("exact_cone_project: dimension mismatch");
  if (m > kExactConeMaxFacets)
    throw ConfigError("exact_cone_project: too many facets");
  Eigen::VectorXd row_norm(m);
  for (int i = 0; i < m; ++i) row_norm[i] = a.row(i).norm();
  const double scale = std::max(1.0, u_hat.norm());

  DykstraResult best;
  best.point = Eigen::VectorXd::Zero(u_hat.size());
  best.sq_distance = u_hat.squaredNorm();  // the apex is always feasible
  std::vector<int> idx;
  for (std::uint32_t mask = 0; mask < (std::uint32_t(1) << m); ++mask) {
    Eigen::VectorXd x;
    if (mask == 0) {
      x = u_hat;
    } else {
      idx.clear();
      for (int i = 0; i < m; ++i)
        if (mask & (std::uint32_t(1) << i)) idx.push_back(i);
      Eigen::MatrixXd nb(Eigen::Index(idx.size()), a.cols());
      for (Eigen::Index k = 0; k < nb.rows(); ++k) nb.row(k) = a.row(idx[std::size_t(k)]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nb * nb.transpose());
      if (es.info() != Eigen::Success) continue;
      const Eigen::VectorXd& eigs = es.eigenvalues();
      // dependent subsets cut the same face as one of their subsets
      if (eigs(0) <= 1e-12 * eigs(eigs.size() - 1)) continue;
      const Eigen::VectorXd lam =
          es.eigenvectors() *
          (es.eigenvectors().transpose() * (nb * u_hat)).cwiseQuotient(eigs);
      x = u_hat - nb.transpose() * lam;
    }
    bool feasible = true;
    for (int i = 0; i < m && feasible; ++i)
      if (a.row(i).dot(x) > kFeasTol * row_norm[i] * scale) feasible = false;
    if (!feasible) continue;
    const double d2 = (u_hat - x).squaredNorm();
    if (d2 < best.sq_distance) {
      best.point = x;
      best.sq_distance = d2;
    }
  }
  return best;
}

enum class TwoHRegion { Interior, Facet1, Facet2, Polar };

// Boundary-ray slopes are diagnostics only; classification goes through the
// projection's active set, which also covers vertical rays.
struct TwoHGeometry {
  double rho = 0.0;
  std::optional<double> beta1, beta2;
  TwoHRegion region = TwoHRegion::Interior;
};

inline TwoHGeometry two_h_geometry(const Eigen::VectorXd& u_hat, const SymMatrix& sigma) {
  if (sigma.dim() != 2 || u_hat.size() != 2)
    throw DimensionMismatchError("two_h_geometry: two hypotheses required");
  const SymMatrix rho_m = correlation(sigma);
  const double rho = rho_m(0, 1);
  if (std::fabs(rho) >= 1.0 - 1e-10)
    throw DegenerateCorrelationError("two_h_geometry: |rho| too close to 1");
  const SymMatrix root = sym_sqrt(sigma);
  const ConeSpec cone = ConeSpec::from_sqrt_covariance(root);

  TwoHGeometry g;
  g.rho = rho;
  // Ray j spans the null space of normal j; keep the direction inside the
  // other half-space. Slope reported unless the ray is vertical.
  for (int j = 0; j < 2; ++j) {
    Eigen::Vector2d dir(-cone.normals(j, 1), cone.normals(j, 0));
    const int other = 1 - j;
    if (cone.normals.row(other).dot(dir) > 0.0) dir = -dir;
    std::optional<double> slope;
    if (std::fabs(dir[0]) > 1e-14 * dir.norm()) slope = dir[1] / dir[0];
    (j == 0 ? g.beta1 : g.beta2) = slope;
  }

  const DykstraResult pr = cone_needs_exact_projection(cone)
                               ? exact_cone_project(u_hat, cone)
                               : dykstra_project(u_hat, cone);
  const double feas = kFeasTol * std::max(u_hat.norm(), 1e-3);
  if (pr.sq_distance <= feas * feas) {
    g.region = TwoHRegion::Interior;
  } else if (pr.point.norm() <= feas) {
    g.region = TwoHRegion::Polar;
  } else {
    const double v1 = cone.normals.row(0).dot(pr.point);
    const double v2 = cone.normals.row(1).dot(pr.point);
    g.region = std::fabs(v1) >= std::fabs(v2) ? TwoHRegion::Facet1 : TwoHRegion::Facet2;
  }
  return g;
}

}  // namespace swald
