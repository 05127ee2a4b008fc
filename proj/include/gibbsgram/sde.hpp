#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gibbsgram/dynamics.hpp"
#include "gibbsgram/schedule.hpp"

namespace gibbs {

struct NoiseSpec {
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::size_t path_count = 1;

  bool operator==(const NoiseSpec&) const = default;
};

/// Open-loop input u(t, x); writes an m-vector.
using InputFn = std::function<void(double, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector>)>;

struct SimulationOptions {
  std::size_t workers = 1;
  /// A path is aborted once |x|_inf exceeds this bound.
  double divergence_bound = 1e6;
};

/// Sampled states, path-major: data[(path * times + t) * n + i].
class EnsembleSnapshots {
 public:
  EnsembleSnapshots(SnapshotSchedule schedule, NoiseSpec noise, std::string model_label,
                    Index dimension, std::vector<double> data);

  std::size_t path_count() const { return noise_.path_count; }
  std::size_t time_count() const { return schedule_.size(); }
  Index dimension() const { return dimension_; }
  const SnapshotSchedule& schedule() const { return schedule_; }
  const NoiseSpec& noise() const { return noise_; }
  const std::string& model_label() const { return model_label_; }
  const std::vector<double>& data() const { return data_; }

  Eigen::Map<const Vector> state(std::size_t path, std::size_t time_index) const {
    return Eigen::Map<const Vector>(
        data_.data() + (path * time_count() + time_index) * static_cast<std::size_t>(dimension_),
        dimension_);
  }

  /// All paths at one snapshot as an n x path_count matrix.
  Matrix states_at(std::size_t time_index) const;

  bool operator==(const EnsembleSnapshots&) const = default;

 private:
  SnapshotSchedule schedule_;
  NoiseSpec noise_;
  std::string model_label_;
  Index dimension_;
  std::vector<double> data_;
};

/// Receives the states of the paths assigned to one worker, in path order.
class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  virtual void begin_path(std::size_t /*path*/) {}
  virtual void record(std::size_t path, std::size_t time_index,
                      const Eigen::Ref<const Vector>& x) = 0;
  /// `diverged` paths may have recorded a prefix of their snapshots.
  virtual void end_path(std::size_t /*path*/, bool /*diverged*/) {}
};

struct DivergenceRecord {
  std::size_t path;
  double time;
  Vector last_finite_state;
};

struct StreamResult {
  std::vector<DivergenceRecord> divergences;  // sorted by path
};

/// Contiguous path slice handled by `worker` out of `workers`.
std::pair<std::size_t, std::size_t> worker_slice(std::size_t paths, std::size_t workers,
                                                 std::size_t worker);

/// Euler-Maruyama integration of dx = (f + g u) dt + g sqrt(T) dW for every
/// path, streaming snapshots into sinks[w] for the paths of worker w. The
/// number of workers is sinks.size(). Output is identical for any worker
/// count because path k draws its noise from the (seed, k) stream only.
StreamResult stream_ensemble(const DynamicsModel& model, const NoiseSpec& noise,
                             const SnapshotSchedule& schedule,
                             std::span<const std::unique_ptr<SnapshotSink>> sinks,
                             const InputFn& input = {}, double divergence_bound = 1e6);

/// Stores every snapshot. Throws DivergenceError for the lowest diverging path.
EnsembleSnapshots simulate_ensemble(const DynamicsModel& model, const NoiseSpec& noise,
                                    const SnapshotSchedule& schedule, const InputFn& input = {},
                                    const SimulationOptions& options = {});

/// Single noiseless, uncontrolled path.
EnsembleSnapshots deterministic_trajectory(const DynamicsModel& model,
                                           const SnapshotSchedule& schedule);

}  // namespace gibbs
