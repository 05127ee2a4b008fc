#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibbsgram/dynamics.hpp"
#include "gibbsgram/exact_sum.hpp"
#include "gibbsgram/sde.hpp"

namespace gibbs {

enum class Provenance { analytic, monte_carlo, quadrature };

std::string to_string(Provenance p);

/// Point about which second moments are taken. `origin` gives the Gibbs
/// Gramian proper; `initial_state` measures the travelling distance x - x0.
enum class Reference { origin, initial_state };

/// Symmetric positive-semidefinite n x n matrix with its provenance.
class GramianMatrix {
 public:
  struct Metadata {
    Provenance provenance = Provenance::analytic;
    /// Horizon of a single-time Gramian; the last snapshot time of a summed one.
    std::optional<double> horizon;
    /// Number of snapshot times summed over (1 for a single-time Gramian).
    std::size_t snapshot_count = 1;
    std::optional<double> temperature;
    /// Monte-Carlo path count.
    std::optional<std::size_t> sample_count;
    Reference reference = Reference::origin;
  };

  /// Symmetrizes `m` as (m + m^T) / 2.
  GramianMatrix(const Matrix& m, Metadata metadata);

  const Matrix& matrix() const { return matrix_; }
  const Metadata& metadata() const { return metadata_; }
  Index dimension() const { return matrix_.rows(); }

  /// Eigenvalues sorted in descending order.
  Vector eigenvalues() const;

  /// All eigenvalues >= -tolerance * lambda_max.
  bool is_positive_semidefinite(double tolerance = 1e-10) const;

 private:
  Matrix matrix_;
  Metadata metadata_;
};

/// G_tau = int_0^tau e^{As} B B^T e^{A^T s} ds from the exponential of the
/// block matrix tau * [[-A, B B^T], [0, A^T]] = [[F11, F12], [0, F22]]:
/// G_tau = F22^T F12.
GramianMatrix linear_gramian(const LinearSystem& sys, double tau);

/// Exact running sum of outer products x x^T (upper triangle stored).
/// Merging and summation order never change the result.
class GramianAccumulator {
 public:
  explicit GramianAccumulator(Index dimension);

  void add(const Eigen::Ref<const Vector>& x);
  void merge(const GramianAccumulator& other);
  void reset();

  /// Sum of all added outer products, rounded once per entry.
  Matrix sum() const;
  Index dimension() const { return n_; }
  std::size_t count() const { return count_; }

  bool operator==(const GramianAccumulator& other) const {
    return n_ == other.n_ && count_ == other.count_ && entries_ == other.entries_;
  }

 private:
  Index n_;
  std::size_t count_ = 0;
  std::vector<ExactSum> entries_;
};

/// Accumulates x x^T (or (x - ref)(x - ref)^T) over every path at the
/// given snapshot indices.
GramianAccumulator accumulate_snapshots(const EnsembleSnapshots& ens,
                                        std::span<const std::size_t> time_indices,
                                        const std::optional<Vector>& reference = std::nullopt);

/// Monte-Carlo stochastic Gibbs Gramian (1/N) sum_k x_k(tau) x_k(tau)^T.
/// With a reference point the centered variant about that point is returned.
GramianMatrix empirical_gibbs_gramian(const EnsembleSnapshots& ens, double tau,
                                      const std::optional<Vector>& reference = std::nullopt);

/// sum over every schedule time of empirical_gibbs_gramian.
GramianMatrix snapshot_summed_gramian(const EnsembleSnapshots& ens,
                                      const std::optional<Vector>& reference = std::nullopt);

/// Streaming counterpart of snapshot_summed_gramian: one instance per worker,
/// each path accumulated separately and merged once it completes without
/// diverging.
class GramianSink : public SnapshotSink {
 public:
  explicit GramianSink(Index dimension, std::optional<Vector> reference = std::nullopt);

  void begin_path(std::size_t path) override;
  void record(std::size_t path, std::size_t time_index, const Eigen::Ref<const Vector>& x) override;
  void end_path(std::size_t path, bool diverged) override;

  const GramianAccumulator& total() const { return total_; }
  std::size_t completed_paths() const { return completed_; }

 private:
  std::optional<Vector> reference_;
  Vector shifted_;
  GramianAccumulator path_;
  GramianAccumulator total_;
  std::size_t completed_ = 0;
};

/// Turns merged per-worker sinks into the snapshot-summed Gramian.
GramianMatrix summed_gramian_from_sinks(std::span<const std::unique_ptr<SnapshotSink>> sinks,
                                        const SnapshotSchedule& schedule, double temperature,
                                        Reference reference = Reference::origin);

struct Box {
  Vector lower;
  Vector upper;
};

struct QuadratureReport {
  /// Share of the mass of e^{-L} over a box twice as wide that lies outside
  /// the requested box.
  double boundary_mass = 0.0;
  double normalization = 0.0;
  /// min of L on the enlarged grid, subtracted before exponentiation.
  double shift = 0.0;
};

using ScalarField = std::function<double(const Eigen::Ref<const Vector>&)>;

/// Second moment of the Gibbs density e^{-L} / int e^{-L} over a box by
/// tensor-product composite Simpson. Dimension <= 3, points_per_axis odd.
/// L may be +inf (zero weight). Throws NumericError when the boundary mass
/// exceeds `max_boundary_mass` or the normalization underflows.
GramianMatrix gibbs_gramian_quadrature(const ScalarField& L, const Box& box, int points_per_axis,
                                       QuadratureReport* report = nullptr,
                                       double max_boundary_mass = 1e-8);

}  // namespace gibbs
