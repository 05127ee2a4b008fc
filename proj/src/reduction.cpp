#include "gibbsgram/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "gibbsgram/errors.hpp"

namespace gibbs {

Vector ProjectionBasis::explained_fraction() const {
  const double total = eigenvalues.sum();
  if (!(total > 0.0)) return Vector::Zero(rank());
  return eigenvalues.head(rank()) / total;
}

namespace {

void normalize_sign(Eigen::Ref<Vector> v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

ProjectionBasis principal_basis(const GramianMatrix& G, Index k) {
  const Index n = G.dimension();
  if (k < 1 || k > n)
    throw ConfigError("reduced dimension k=" + std::to_string(k) + " outside 1.." + std::to_string(n));
  if (!G.matrix().allFinite()) throw NumericError("Gramian has non-finite entries");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(G.matrix());
  if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver did not converge");
  const Vector ev = solver.eigenvalues().reverse();
  Matrix vectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < n; ++j) normalize_sign(vectors.col(j));

  // reorder within tie groups
  const double tie = 1e-12 * std::abs(ev[0]);
  Index start = 0;
  while (start < n) {
    Index end = start + 1;
    while (end < n && std::abs(ev[end - 1] - ev[end]) <= tie) ++end;
    if (end - start > 1) {
      std::vector<Index> order(static_cast<std::size_t>(end - start));
      std::iota(order.begin(), order.end(), start);
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return std::lexicographical_compare(vectors.col(b).begin(), vectors.col(b).end(),
                                            vectors.col(a).begin(), vectors.col(a).end());
      });
      const Matrix group = vectors.middleCols(start, end - start);
      for (Index j = 0; j < end - start; ++j)
        vectors.col(start + j) = group.col(order[static_cast<std::size_t>(j)] - start);
    }
    start = end;
  }

  ProjectionBasis out;
  out.basis = vectors.leftCols(k);
  out.eigenvalues = ev;
  out.source = std::make_shared<const GramianMatrix>(G);
  return out;
}

double projection_error(const EnsembleSnapshots& ens, const Eigen::Ref<const Matrix>& basis) {
  if (basis.rows() != ens.dimension())
    throw ConfigError("basis has " + std::to_string(basis.rows()) + " rows but the snapshots have "
                      "dimension " + std::to_string(ens.dimension()));
  ExactSum total;
  Vector residual(ens.dimension());
  for (std::size_t k = 0; k < ens.path_count(); ++k)
    for (std::size_t j = 0; j < ens.time_count(); ++j) {
      const auto x = ens.state(k, j);
      residual.noalias() = x - basis * (basis.transpose() * x);
      total.add(residual.squaredNorm());
    }
  return total.value() / static_cast<double>(ens.path_count());
}

ReducedModel galerkin_reduce(const DynamicsModel& model, const ProjectionBasis& rho) {
  const Index n = model.dimension();
  if (rho.rows() != n)
    throw ConfigError("basis has " + std::to_string(rho.rows()) + " rows, model dimension is " +
                      std::to_string(n));
  const Matrix P = rho.basis;
  const Index k = P.cols();
  const Vector z0 = P.transpose() * model.initial_state();
  const std::string label = model.label() + "/galerkin" + std::to_string(k);

  if (const auto& lin = model.linear()) {
    const Matrix Ar = P.transpose() * lin->A * P;
    const Matrix Br = P.transpose() * lin->B;
    return {build_linear(Ar, Br, z0, label), model, rho};
  }

  auto drift = [model, P](const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) {
    const Vector x = P * z;
    out.noalias() = P.transpose() * model.drift(x);
  };
  if (const auto& g = model.constant_gain()) {
    return {DynamicsModel(label, drift, Matrix(P.transpose() * *g), z0), model, rho};
  }
  auto gain = [model, P](const Eigen::Ref<const Vector>& z, Eigen::Ref<Matrix> out) {
    const Vector x = P * z;
    out.noalias() = P.transpose() * model.input_gain(x);
  };
  return {DynamicsModel(label, k, model.inputs(), drift, gain, z0), model, rho};
}

double directional_reach_score(const EnsembleSnapshots& ens, const Eigen::Ref<const Vector>& e,
                               double tau, bool* was_normalized) {
  if (e.size() != ens.dimension()) throw ConfigError("direction has the wrong dimension");
  const double norm = e.norm();
  if (!(norm > 0.0)) throw ConfigError("direction must be nonzero");
  Vector unit = e;
  const bool rescale = std::abs(norm - 1.0) > 1e-12;
  if (rescale) {
    unit /= norm;
    std::cerr << "warning: direction normalized from length " << norm << '\n';
  }
  if (was_normalized) *was_normalized = rescale;
  const std::size_t j = ens.schedule().require_index(tau);
  ExactSum total;
  for (std::size_t k = 0; k < ens.path_count(); ++k) {
    const double p = unit.dot(ens.state(k, j));
    total.add(p * p);
  }
  return total.value() / static_cast<double>(ens.path_count());
}

}  // namespace gibbs
