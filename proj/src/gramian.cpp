#include "gibbsgram/gramian.hpp"

#include <cmath>
#include <limits>

#include "gibbsgram/errors.hpp"
#include "gibbsgram/matrix_exponential.hpp"

namespace gibbs {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::analytic: return "analytic";
    case Provenance::monte_carlo: return "monte_carlo";
    case Provenance::quadrature: return "quadrature";
  }
  return "unknown";
}

GramianMatrix::GramianMatrix(const Matrix& m, Metadata metadata)
    : matrix_(0.5 * (m + m.transpose())), metadata_(std::move(metadata)) {
  if (m.rows() != m.cols()) throw ConfigError("Gramian must be square");
}

Vector GramianMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().reverse();
}

bool GramianMatrix::is_positive_semidefinite(double tolerance) const {
  const Vector ev = eigenvalues();
  if (ev.size() == 0) return true;
  return ev.minCoeff() >= -tolerance * std::max(ev.maxCoeff(), 0.0);
}

GramianMatrix linear_gramian(const LinearSystem& sys, double tau) {
  const Index n = sys.A.rows();
  if (sys.A.cols() != n) throw ConfigError("matrix A must be square");
  if (sys.B.rows() != n) throw ConfigError("matrix B must have one row per state");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("horizon tau must be positive");

  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -sys.A;
  block.topRightCorner(n, n) = sys.B * sys.B.transpose();
  block.bottomRightCorner(n, n) = sys.A.transpose();
  const Matrix F = matrix_exponential(tau * block);
  const Matrix G = F.bottomRightCorner(n, n).transpose() * F.topRightCorner(n, n);
  if (!G.allFinite()) throw NumericError("linear Gramian overflowed; horizon too long for A");
  GramianMatrix::Metadata meta;
  meta.provenance = Provenance::analytic;
  meta.horizon = tau;
  return GramianMatrix(G, meta);
}

GramianAccumulator::GramianAccumulator(Index dimension)
    : n_(dimension), entries_(static_cast<std::size_t>(dimension * (dimension + 1) / 2)) {
  if (dimension < 1) throw ConfigError("Gramian dimension must be positive");
}

void GramianAccumulator::add(const Eigen::Ref<const Vector>& x) {
  std::size_t k = 0;
  for (Index i = 0; i < n_; ++i)
    for (Index j = i; j < n_; ++j) entries_[k++].add(x[i] * x[j]);
  ++count_;
}

void GramianAccumulator::merge(const GramianAccumulator& other) {
  if (other.n_ != n_) throw ConfigError("cannot merge Gramian accumulators of different size");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k].merge(other.entries_[k]);
  count_ += other.count_;
}

void GramianAccumulator::reset() {
  for (auto& e : entries_) e.reset();
  count_ = 0;
}

Matrix GramianAccumulator::sum() const {
  Matrix out(n_, n_);
  std::size_t k = 0;
  for (Index i = 0; i < n_; ++i)
    for (Index j = i; j < n_; ++j) out(i, j) = out(j, i) = entries_[k++].value();
  return out;
}

namespace {

void check_reference(const std::optional<Vector>& reference, Index n) {
  if (reference && reference->size() != n)
    throw ConfigError("reference point has length " + std::to_string(reference->size()) +
                      ", expected " + std::to_string(n));
}

GramianMatrix finish_monte_carlo(const Matrix& sum, std::size_t paths, double temperature,
                                 double horizon, std::size_t snapshots, bool centered) {
  if (paths == 0) throw NumericError("no completed paths to estimate a Gramian from");
  GramianMatrix::Metadata meta;
  meta.provenance = Provenance::monte_carlo;
  meta.horizon = horizon;
  meta.snapshot_count = snapshots;
  meta.temperature = temperature;
  meta.sample_count = paths;
  meta.reference = centered ? Reference::initial_state : Reference::origin;
  return GramianMatrix(sum / static_cast<double>(paths), meta);
}

}  // namespace

GramianAccumulator accumulate_snapshots(const EnsembleSnapshots& ens,
                                        std::span<const std::size_t> time_indices,
                                        const std::optional<Vector>& reference) {
  check_reference(reference, ens.dimension());
  GramianAccumulator acc(ens.dimension());
  Vector shifted(ens.dimension());
  for (std::size_t j : time_indices) {
    if (j >= ens.time_count()) throw LookupError("snapshot index out of range");
    for (std::size_t k = 0; k < ens.path_count(); ++k) {
      if (reference) {
        shifted = ens.state(k, j) - *reference;
        acc.add(shifted);
      } else {
        acc.add(ens.state(k, j));
      }
    }
  }
  return acc;
}

GramianMatrix empirical_gibbs_gramian(const EnsembleSnapshots& ens, double tau,
                                      const std::optional<Vector>& reference) {
  const std::size_t index = ens.schedule().require_index(tau);
  const std::size_t indices[] = {index};
  const auto acc = accumulate_snapshots(ens, indices, reference);
  return finish_monte_carlo(acc.sum(), ens.path_count(), ens.noise().temperature,
                            ens.schedule().times()[index], 1, reference.has_value());
}

GramianMatrix snapshot_summed_gramian(const EnsembleSnapshots& ens,
                                      const std::optional<Vector>& reference) {
  if (ens.time_count() == 0) throw ConfigError("snapshot schedule is empty");
  std::vector<std::size_t> all(ens.time_count());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  const auto acc = accumulate_snapshots(ens, all, reference);
  return finish_monte_carlo(acc.sum(), ens.path_count(), ens.noise().temperature,
                            ens.schedule().horizon(), ens.time_count(), reference.has_value());
}

GramianSink::GramianSink(Index dimension, std::optional<Vector> reference)
    : reference_(std::move(reference)), shifted_(dimension), path_(dimension), total_(dimension) {
  check_reference(reference_, dimension);
}

void GramianSink::begin_path(std::size_t) { path_.reset(); }

void GramianSink::record(std::size_t, std::size_t, const Eigen::Ref<const Vector>& x) {
  if (reference_) {
    shifted_ = x - *reference_;
    path_.add(shifted_);
  } else {
    path_.add(x);
  }
}

void GramianSink::end_path(std::size_t, bool diverged) {
  if (diverged) return;
  total_.merge(path_);
  ++completed_;
}

GramianMatrix summed_gramian_from_sinks(std::span<const std::unique_ptr<SnapshotSink>> sinks,
                                        const SnapshotSchedule& schedule, double temperature,
                                        Reference reference) {
  std::optional<GramianAccumulator> total;
  std::size_t paths = 0;
  for (const auto& s : sinks) {
    const auto* sink = dynamic_cast<const GramianSink*>(s.get());
    if (!sink) throw ConfigError("sink is not a GramianSink");
    if (!total) total.emplace(sink->total().dimension());
    total->merge(sink->total());
    paths += sink->completed_paths();
  }
  if (!total) throw ConfigError("no sinks to merge");
  return finish_monte_carlo(total->sum(), paths, temperature, schedule.horizon(), schedule.size(),
                            reference == Reference::initial_state);
}

namespace {

/// Composite Simpson weights h/3 * [1, 4, 2, ..., 4, 1].
std::vector<double> simpson_weights(int points, double h) {
  std::vector<double> w(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    w[static_cast<std::size_t>(i)] =
        h / 3.0 * ((i == 0 || i == points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
  return w;
}

}  // namespace

GramianMatrix gibbs_gramian_quadrature(const ScalarField& L, const Box& box, int points_per_axis,
                                       QuadratureReport* report, double max_boundary_mass) {
  const Index d = box.lower.size();
  if (d < 1 || box.upper.size() != d) throw ConfigError("quadrature box bounds are malformed");
  if (d > 3)
    throw ConfigError("quadrature Gramian is limited to dimension 3; use the Monte-Carlo "
                      "estimator for larger systems");
  if (points_per_axis < 3 || points_per_axis % 2 == 0)
    throw ConfigError("Simpson quadrature needs an odd number of points per axis (>= 3)");
  for (Index a = 0; a < d; ++a)
    if (!(box.upper[a] > box.lower[a])) throw ConfigError("quadrature box has an empty axis");

  // Enlarged grid: same spacing, twice the half-width; the requested box is the
  // centred sub-grid starting at index `offset`.
  const int inner = points_per_axis;
  const int outer = 2 * inner - 1;
  const int offset = (inner - 1) / 2;
  Vector h(d), outer_lower(d);
  for (Index a = 0; a < d; ++a) {
    h[a] = (box.upper[a] - box.lower[a]) / (inner - 1);
    outer_lower[a] = box.lower[a] - offset * h[a];
  }

  std::size_t total = 1;
  for (Index a = 0; a < d; ++a) total *= static_cast<std::size_t>(outer);
  std::vector<double> values(total);
  std::vector<int> idx(static_cast<std::size_t>(d));
  Vector x(d);
  double shift = std::numeric_limits<double>::infinity();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (Index a = d - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rem % outer);
      rem /= outer;
      x[a] = outer_lower[a] + idx[static_cast<std::size_t>(a)] * h[a];
    }
    const double v = L(x);
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity()) {
      throw NumericError("L is NaN or -inf on the quadrature grid");
    }
    values[flat] = v;
    shift = std::min(shift, v);
  }
  if (!std::isfinite(shift))
    throw NumericError("L is +inf on the whole quadrature grid; rescale or move the domain");

  std::vector<std::vector<double>> w_outer(static_cast<std::size_t>(d)),
      w_inner(static_cast<std::size_t>(d));
  for (Index a = 0; a < d; ++a) {
    w_outer[static_cast<std::size_t>(a)] = simpson_weights(outer, h[a]);
    w_inner[static_cast<std::size_t>(a)] = simpson_weights(inner, h[a]);
  }

  double z_outer = 0.0, z_inner = 0.0;
  Matrix moment = Matrix::Zero(d, d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double wo = 1.0, wi = 1.0;
    bool inside = true;
    for (Index a = d - 1; a >= 0; --a) {
      const int i = static_cast<int>(rem % outer);
      rem /= outer;
      x[a] = outer_lower[a] + i * h[a];
      wo *= w_outer[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
      const int j = i - offset;
      if (j < 0 || j >= inner) {
        inside = false;
      } else {
        wi *= w_inner[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)];
      }
    }
    const double density = std::exp(-(values[flat] - shift));
    z_outer += wo * density;
    if (inside) {
      z_inner += wi * density;
      moment.noalias() += (wi * density) * (x * x.transpose());
    }
  }
  if (!(z_inner > 0.0) || !std::isfinite(z_inner) || !std::isfinite(z_outer))
    throw NumericError(
        "normalization integral of e^-L underflowed; rescale the domain toward the mass of L");

  const double boundary_mass = std::max(0.0, 1.0 - z_inner / z_outer);
  if (report) *report = {boundary_mass, z_inner, shift};
  if (boundary_mass > max_boundary_mass)
    throw NumericError("Gibbs density leaks " + std::to_string(boundary_mass) +
                       " of its mass outside the quadrature box; enlarge the box");

  GramianMatrix::Metadata meta;
  meta.provenance = Provenance::quadrature;
  return GramianMatrix(moment / z_inner, meta);
}

}  // namespace gibbs
