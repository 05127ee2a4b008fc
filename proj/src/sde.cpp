#include "gibbsgram/sde.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "gibbsgram/errors.hpp"
#include "gibbsgram/philox.hpp"

namespace gibbs {

EnsembleSnapshots::EnsembleSnapshots(SnapshotSchedule schedule, NoiseSpec noise,
                                     std::string model_label, Index dimension,
                                     std::vector<double> data)
    : schedule_(std::move(schedule)),
      noise_(noise),
      model_label_(std::move(model_label)),
      dimension_(dimension),
      data_(std::move(data)) {
  const std::size_t expected =
      noise_.path_count * schedule_.size() * static_cast<std::size_t>(dimension_);
  if (data_.size() != expected)
    throw ConfigError("snapshot data has " + std::to_string(data_.size()) + " values, expected " +
                      std::to_string(expected));
}

Matrix EnsembleSnapshots::states_at(std::size_t time_index) const {
  Matrix out(dimension_, static_cast<Index>(path_count()));
  for (std::size_t k = 0; k < path_count(); ++k) out.col(static_cast<Index>(k)) = state(k, time_index);
  return out;
}

std::pair<std::size_t, std::size_t> worker_slice(std::size_t paths, std::size_t workers,
                                                 std::size_t worker) {
  return {paths * worker / workers, paths * (worker + 1) / workers};
}

namespace {

class PathIntegrator {
 public:
  PathIntegrator(const DynamicsModel& model, const NoiseSpec& noise,
                 const SnapshotSchedule& schedule, const InputFn& input, double bound)
      : model_(model),
        noise_(noise),
        schedule_(schedule),
        input_(input),
        bound_(bound),
        x_(model.dimension()),
        previous_(model.dimension()),
        f_(model.dimension()),
        u_(model.inputs()),
        w_(model.inputs()),
        g_(model.dimension(), model.inputs()) {
    if (model.constant_gain()) g_ = *model.constant_gain();
  }

  /// Returns false if the path diverged; `record` is filled in that case.
  bool run(std::size_t path, SnapshotSink& sink, DivergenceRecord& record) {
    const double dt = schedule_.dt();
    const double noise_scale = std::sqrt(noise_.temperature * dt);
    const bool noisy = noise_.temperature > 0.0;
    const bool state_gain = !model_.constant_gain().has_value();
    const auto m = static_cast<std::uint64_t>(model_.inputs());
    NormalStream normals(noise_.seed, path);

    x_ = model_.initial_state();
    std::int64_t step = 0;
    const auto steps = schedule_.steps();
    for (std::size_t j = 0; j < steps.size(); ++j) {
      for (; step < steps[j]; ++step) {
        const double t = static_cast<double>(step) * dt;
        previous_ = x_;
        model_.drift(x_, f_);
        if (state_gain) model_.input_gain(x_, g_);
        if (input_) {
          input_(t, x_, u_);
          f_.noalias() += g_ * u_;
        }
        x_ += dt * f_;
        if (noisy) {
          const auto base = static_cast<std::uint64_t>(step) * m;
          for (std::uint64_t c = 0; c < m; ++c)
            w_[static_cast<Index>(c)] = noise_scale * normals(base + c);
          x_.noalias() += g_ * w_;
        }
        // negated form also catches NaN
        if (!(x_.cwiseAbs().maxCoeff() <= bound_)) {
          record = {path, t + dt, previous_};
          return false;
        }
      }
      sink.record(path, j, x_);
    }
    return true;
  }

 private:
  const DynamicsModel& model_;
  const NoiseSpec& noise_;
  const SnapshotSchedule& schedule_;
  const InputFn& input_;
  double bound_;
  Vector x_, previous_, f_, u_, w_;
  Matrix g_;
};

class StoringSink final : public SnapshotSink {
 public:
  StoringSink(double* data, std::size_t times, std::size_t n) : data_(data), times_(times), n_(n) {}

  void record(std::size_t path, std::size_t time_index, const Eigen::Ref<const Vector>& x) override {
    std::copy(x.data(), x.data() + n_, data_ + (path * times_ + time_index) * n_);
  }

 private:
  double* data_;
  std::size_t times_, n_;
};

void validate(const DynamicsModel& model, const NoiseSpec& noise) {
  if (!(noise.temperature >= 0.0) || !std::isfinite(noise.temperature))
    throw ConfigError("temperature must be nonnegative, got " + std::to_string(noise.temperature));
  if (noise.path_count < 1) throw ConfigError("path count must be positive");
  (void)model;
}

}  // namespace

StreamResult stream_ensemble(const DynamicsModel& model, const NoiseSpec& noise,
                             const SnapshotSchedule& schedule,
                             std::span<const std::unique_ptr<SnapshotSink>> sinks,
                             const InputFn& input, double divergence_bound) {
  validate(model, noise);
  if (sinks.empty()) throw ConfigError("at least one worker is required");
  const std::size_t workers = sinks.size();
  std::vector<std::vector<DivergenceRecord>> diverged(workers);

  auto work = [&](std::size_t w) {
    PathIntegrator integrator(model, noise, schedule, input, divergence_bound);
    const auto [first, last] = worker_slice(noise.path_count, workers, w);
    DivergenceRecord record{};
    for (std::size_t k = first; k < last; ++k) {
      sinks[w]->begin_path(k);
      const bool ok = integrator.run(k, *sinks[w], record);
      if (!ok) diverged[w].push_back(record);
      sinks[w]->end_path(k, !ok);
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
  }

  StreamResult result;
  for (auto& d : diverged)
    for (auto& r : d) result.divergences.push_back(std::move(r));
  return result;
}

EnsembleSnapshots simulate_ensemble(const DynamicsModel& model, const NoiseSpec& noise,
                                    const SnapshotSchedule& schedule, const InputFn& input,
                                    const SimulationOptions& options) {
  validate(model, noise);
  const auto n = static_cast<std::size_t>(model.dimension());
  std::vector<double> data(noise.path_count * schedule.size() * n);
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, noise.path_count));
  std::vector<std::unique_ptr<SnapshotSink>> sinks;
  for (std::size_t w = 0; w < workers; ++w)
    sinks.push_back(std::make_unique<StoringSink>(data.data(), schedule.size(), n));
  auto result = stream_ensemble(model, noise, schedule, sinks, input, options.divergence_bound);
  if (!result.divergences.empty()) {
    auto& first = result.divergences.front();
    throw DivergenceError(first.path, first.time, std::move(first.last_finite_state));
  }
  return EnsembleSnapshots(schedule, noise, model.label(), model.dimension(), std::move(data));
}

EnsembleSnapshots deterministic_trajectory(const DynamicsModel& model,
                                           const SnapshotSchedule& schedule) {
  return simulate_ensemble(model, NoiseSpec{0.0, 0, 1}, schedule);
}

}  // namespace gibbs
