#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gibbs {

/// Strictly increasing snapshot times on the integration grid k * dt.
///
/// Requested times are snapped to the nearest multiple of dt; every time that
/// moved by more than 1e-12 relative is listed in snaps().
class SnapshotSchedule {
 public:
  struct Snap {
    std::size_t index;
    double requested;
    double snapped;
  };

  SnapshotSchedule(std::vector<double> times, double dt);

  /// start, start + step, ... up to and including stop (within step/2).
  static SnapshotSchedule range(double start, double step, double stop, double dt);

  double dt() const { return dt_; }
  std::size_t size() const { return steps_.size(); }
  std::span<const double> times() const { return times_; }
  std::span<const std::int64_t> steps() const { return steps_; }
  const std::vector<Snap>& snaps() const { return snaps_; }
  double horizon() const { return times_.back(); }

  /// Index of the snapshot at time t, matched on the integration grid.
  std::optional<std::size_t> index_of(double t) const;
  /// Like index_of but throws LookupError listing the available times.
  std::size_t require_index(double t) const;

  SnapshotSchedule subset(std::span<const std::size_t> indices) const;

  bool operator==(const SnapshotSchedule& other) const {
    return dt_ == other.dt_ && steps_ == other.steps_;
  }

 private:
  SnapshotSchedule() = default;

  double dt_ = 0.0;
  std::vector<double> times_;
  std::vector<std::int64_t> steps_;
  std::vector<Snap> snaps_;
};

}  // namespace gibbs
