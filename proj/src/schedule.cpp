#include "gibbsgram/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gibbsgram/errors.hpp"

namespace gibbs {

SnapshotSchedule::SnapshotSchedule(std::vector<double> times, double dt) : dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integration step dt must be positive");
  if (times.empty()) throw ConfigError("snapshot schedule is empty");
  steps_.reserve(times.size());
  times_.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (!(t > 0.0) || !std::isfinite(t))
      throw ConfigError("snapshot time " + std::to_string(t) + " must be positive and finite");
    const auto k = static_cast<std::int64_t>(std::llround(t / dt));
    if (k < 1) throw ConfigError("snapshot time " + std::to_string(t) + " is shorter than dt");
    if (!steps_.empty() && k <= steps_.back())
      throw ConfigError("snapshot times must be strictly increasing on the dt grid (time " +
                        std::to_string(t) + ")");
    const double snapped = static_cast<double>(k) * dt;
    if (std::abs(snapped - t) > 1e-12 * t) snaps_.push_back({i, t, snapped});
    steps_.push_back(k);
    times_.push_back(snapped);
  }
}

SnapshotSchedule SnapshotSchedule::range(double start, double step, double stop, double dt) {
  if (!(step > 0.0)) throw ConfigError("schedule range step must be positive");
  if (stop < start) throw ConfigError("schedule range stop precedes start");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 0.5)) + 1;
  std::vector<double> times(count);
  for (std::size_t i = 0; i < count; ++i) times[i] = start + static_cast<double>(i) * step;
  return SnapshotSchedule(std::move(times), dt);
}

std::optional<std::size_t> SnapshotSchedule::index_of(double t) const {
  const double k = t / dt_;
  const auto step = static_cast<std::int64_t>(std::llround(k));
  if (std::abs(k - static_cast<double>(step)) > 1e-6) return std::nullopt;
  const auto it = std::lower_bound(steps_.begin(), steps_.end(), step);
  if (it == steps_.end() || *it != step) return std::nullopt;
  return static_cast<std::size_t>(it - steps_.begin());
}

std::size_t SnapshotSchedule::require_index(double t) const {
  if (auto i = index_of(t)) return *i;
  std::ostringstream os;
  os << "time " << t << " is not in the snapshot schedule; available:";
  const std::size_t shown = std::min<std::size_t>(times_.size(), 12);
  for (std::size_t i = 0; i < shown; ++i) os << ' ' << times_[i];
  if (shown < times_.size()) os << " ... " << times_.back() << " (" << times_.size() << " times)";
  throw LookupError(os.str());
}

SnapshotSchedule SnapshotSchedule::subset(std::span<const std::size_t> indices) const {
  SnapshotSchedule s;
  s.dt_ = dt_;
  for (std::size_t i : indices) {
    if (i >= steps_.size()) throw LookupError("schedule index out of range");
    if (!s.steps_.empty() && steps_[i] <= s.steps_.back())
      throw ConfigError("schedule subset indices must be increasing");
    s.steps_.push_back(steps_[i]);
    s.times_.push_back(times_[i]);
  }
  if (s.steps_.empty()) throw ConfigError("snapshot schedule is empty");
  return s;
}

}  // namespace gibbs
