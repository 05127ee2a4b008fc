#pragma once

#include <memory>

#include "gibbsgram/dynamics.hpp"
#include "gibbsgram/gramian.hpp"
#include "gibbsgram/sde.hpp"

namespace gibbs {

/// Orthonormal n x k basis of leading Gramian eigenvectors.
///
/// Columns follow descending eigenvalue; each column is signed so that its
/// first nonzero component is positive.
struct ProjectionBasis {
  Matrix basis;
  /// Full spectrum of the source Gramian, descending.
  Vector eigenvalues;
  std::shared_ptr<const GramianMatrix> source;

  Index rows() const { return basis.rows(); }
  Index rank() const { return basis.cols(); }
  /// lambda_1..lambda_k / sum lambda.
  Vector explained_fraction() const;
};

/// Top-k eigenvectors of G. Eigenvalues equal within 1e-12 lambda_1 form a
/// tie group whose vectors are ordered lexicographically (descending) after
/// sign normalization.
ProjectionBasis principal_basis(const GramianMatrix& G, Index k);

/// Ensemble average of sum_tau |(I - rho rho^T) x(tau)|^2.
double projection_error(const EnsembleSnapshots& ens, const Eigen::Ref<const Matrix>& basis);
inline double projection_error(const EnsembleSnapshots& ens, const ProjectionBasis& rho) {
  return projection_error(ens, rho.basis);
}

/// Galerkin model dz/dt = rho^T f(rho z) + rho^T g(rho z) u with z0 = rho^T x0.
struct ReducedModel {
  DynamicsModel model;
  DynamicsModel base;
  ProjectionBasis basis;

  Index k() const { return basis.rank(); }
  /// rho z
  Vector lift(const Eigen::Ref<const Vector>& z) const { return basis.basis * z; }
};

ReducedModel galerkin_reduce(const DynamicsModel& model, const ProjectionBasis& rho);

/// (1/N) sum_k |e^T x_k(tau)|^2. A non-unit e is normalized; `was_normalized`
/// reports when that happened.
double directional_reach_score(const EnsembleSnapshots& ens, const Eigen::Ref<const Vector>& e,
                               double tau, bool* was_normalized = nullptr);

}  // namespace gibbs
