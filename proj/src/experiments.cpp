#include "gibbsgram/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gibbsgram/errors.hpp"
#include "gibbsgram/matrix_exponential.hpp"
#include "gibbsgram/philox.hpp"

namespace gibbs {

namespace {

std::vector<double> to_std(const Eigen::Ref<const Vector>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Json matrix_rows(const Eigen::Ref<const Matrix>& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::vector<std::string> FhnExperimentConfig::overrides() const {
  const FhnExperimentConfig d;
  std::vector<std::string> out;
  if (coupling != d.coupling) out.push_back("coupling");
  if (initial_state != d.initial_state) out.push_back("initial_state");
  if (input_pattern.rows() != d.input_pattern.rows() || input_pattern.cols() != d.input_pattern.cols() ||
      input_pattern != d.input_pattern)
    out.push_back("input_pattern");
  if (time_start != d.time_start) out.push_back("time_start");
  if (time_step != d.time_step) out.push_back("time_step");
  if (time_stop != d.time_stop) out.push_back("time_stop");
  if (dt != d.dt) out.push_back("dt");
  if (paths != d.paths) out.push_back("paths");
  if (sync_threshold != d.sync_threshold) out.push_back("sync_threshold");
  if (sync_hold != d.sync_hold) out.push_back("sync_hold");
  return out;
}

DynamicsModel FhnExperimentConfig::model() const {
  return build_fhn(coupling, input_pattern, initial_state, "fhn");
}

SnapshotSchedule FhnExperimentConfig::schedule() const {
  return SnapshotSchedule::range(time_start, time_step, time_stop, dt);
}

Json FhnExperimentConfig::to_json() const {
  Json j;
  j["neurons"] = coupling.rows();
  j["coupling"] = matrix_rows(coupling);
  j["initial_state"] = to_std(initial_state);
  j["input_pattern"] = matrix_rows(input_pattern);
  j["temperature"] = temperature;
  j["schedule"] = {{"start", time_start}, {"step", time_step}, {"stop", time_stop}, {"dt", dt}};
  j["paths"] = paths;
  j["seed"] = seed;
  j["sync_threshold"] = sync_threshold;
  j["sync_hold"] = sync_hold;
  j["overrides"] = overrides();
  return j;
}

bool is_low_temperature(double t) { return std::abs(t - kLowTemperature) <= 1e-9 * kLowTemperature; }
bool is_high_temperature(double t) { return std::abs(t - kHighTemperature) <= 1e-9 * kHighTemperature; }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::approx_equal: return "approx_equal";
    case Verdict::not_approx_equal: return "not_approx_equal";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

Verdict classify_similarity(double score) {
  if (score > kApproxEqualThreshold) return Verdict::approx_equal;
  if (score < kNotApproxEqualThreshold) return Verdict::not_approx_equal;
  return Verdict::inconclusive;
}

double block_similarity(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, std::abs(a.cwiseProduct(b).sum()) / (na * nb));
}

const PairSimilarity& CorrelationReport::pair(int a, int b) const {
  for (const auto& p : pairs)
    if ((p.first == a && p.second == b) || (p.first == b && p.second == a)) return p;
  throw LookupError("no similarity for neuron pair " + std::to_string(a) + "," + std::to_string(b));
}

CorrelationReport correlation_report(const ProjectionBasis& basis) {
  const Index n = basis.rows();
  if (n % 2 != 0 || n < 4) throw ConfigError("correlation analysis needs an interleaved (v, w) layout");
  if (basis.rank() != 2) throw ConfigError("correlation analysis uses the k = 2 basis");
  const int p = static_cast<int>(n / 2);
  CorrelationReport r;
  for (int i = 0; i < p; ++i) r.blocks.push_back(basis.basis.middleRows(2 * i, 2));
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      const double s = block_similarity(r.blocks[static_cast<std::size_t>(i)], r.blocks[static_cast<std::size_t>(j)]);
      r.pairs.push_back({i + 1, j + 1, s, classify_similarity(s)});
    }
  const double top = basis.eigenvalues[0];
  r.eigenvalue_ratios = top > 0.0 ? Vector(basis.eigenvalues / top) : Vector::Zero(n);

  if (p >= 4) {
    const Matrix left = 0.5 * (r.blocks[0] + r.blocks[1]);
    const Matrix right = 0.5 * (r.blocks[2] + r.blocks[3]);
    r.relation = left * right.inverse();
    Matrix reference(2, 2);
    reference << 0.0406, -1.0199, 1.4383, -0.4133;
    bool signs = true;
    for (Index k = 0; k < 4; ++k)
      signs = signs && ((r.relation(k) > 0) == (reference(k) > 0));
    auto rank_order = [](const Matrix& m) {
      std::array<Index, 4> idx{0, 1, 2, 3};
      std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return std::abs(m(a)) < std::abs(m(b)); });
      return idx;
    };
    r.relation_loosely_matches = r.relation.allFinite() && signs && rank_order(r.relation) == rank_order(reference);
  }
  return r;
}

std::vector<std::string> check_verdict_pattern(const CorrelationReport& report, double temperature) {
  std::vector<std::string> diffs;
  auto expect = [&](int a, int b, Verdict want) {
    const auto& p = report.pair(a, b);
    if (p.verdict != want) {
      std::ostringstream os;
      os << "rho" << a << " vs rho" << b << ": expected " << to_string(want) << ", observed "
         << to_string(p.verdict) << " (similarity " << p.score << ")";
      diffs.push_back(os.str());
    }
  };
  if (is_low_temperature(temperature)) {
    expect(1, 2, Verdict::approx_equal);
    expect(3, 4, Verdict::approx_equal);
    expect(2, 3, Verdict::not_approx_equal);
  } else if (is_high_temperature(temperature)) {
    for (const auto& p : report.pairs) expect(p.first, p.second, Verdict::approx_equal);
  }
  for (Index i = 2; i < report.eigenvalue_ratios.size(); ++i) {
    if (!(report.eigenvalue_ratios[i] < kEigenvalueRatioBound)) {
      std::ostringstream os;
      os << "lambda" << i + 1 << "/lambda1: expected < " << kEigenvalueRatioBound << ", observed "
         << report.eigenvalue_ratios[i];
      diffs.push_back(os.str());
    }
  }
  return diffs;
}

void SettleTracker::observe(double t, double value) {
  if (value < threshold_) {
    if (std::isnan(run_start_)) run_start_ = t;
    if (std::isinf(settled_) && t - run_start_ >= hold_ - 1e-9) settled_ = run_start_;
  } else {
    run_start_ = std::numeric_limits<double>::quiet_NaN();
  }
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

namespace {

void check_sync_layout(Index n) {
  if (n % 2 != 0 || n < 8)
    throw ConfigError("synchronization metrics need an interleaved FitzHugh-Nagumo layout with at "
                      "least 4 neurons (dimension " + std::to_string(n) + ")");
}

double pair_distance(const Eigen::Ref<const Vector>& x, int a, int b) {
  return (x.segment(2 * (a - 1), 2) - x.segment(2 * (b - 1), 2)).norm();
}

}  // namespace

SyncMetrics sync_metrics(const EnsembleSnapshots& ens, double threshold, double hold) {
  check_sync_layout(ens.dimension());
  SyncMetrics out;
  out.threshold = threshold;
  out.hold = hold;
  const auto paths = static_cast<Index>(ens.path_count());
  const auto times = static_cast<Index>(ens.time_count());
  const auto t = ens.schedule().times();
  for (std::size_t p = 0; p < kSyncPairs.size(); ++p) {
    out.series[p].resize(paths, times);
    out.settle[p].resize(ens.path_count());
    for (Index k = 0; k < paths; ++k) {
      SettleTracker tracker(threshold, hold);
      for (Index j = 0; j < times; ++j) {
        const double d = pair_distance(ens.state(static_cast<std::size_t>(k), static_cast<std::size_t>(j)),
                                       kSyncPairs[p].first, kSyncPairs[p].second);
        out.series[p](k, j) = d;
        tracker.observe(t[static_cast<std::size_t>(j)], d);
      }
      out.settle[p][static_cast<std::size_t>(k)] = tracker.settled();
    }
    out.median_settle[p] = median(out.settle[p]);
  }
  return out;
}

namespace {

/// Gramian accumulation plus per-path synchronization tracking.
class FhnSink final : public SnapshotSink {
 public:
  FhnSink(const FhnExperimentConfig& cfg, std::span<const double> times,
          std::array<std::vector<double>, 3>& settle, Matrix& sample_path)
      : gramian_(cfg.initial_state.size()),
        cfg_(cfg),
        times_(times),
        settle_(settle),
        sample_path_(sample_path) {}

  void begin_path(std::size_t path) override {
    gramian_.begin_path(path);
    trackers_.clear();
    for (std::size_t p = 0; p < kSyncPairs.size(); ++p)
      trackers_.emplace_back(cfg_.sync_threshold, cfg_.sync_hold);
  }

  void record(std::size_t path, std::size_t j, const Eigen::Ref<const Vector>& x) override {
    gramian_.record(path, j, x);
    for (std::size_t p = 0; p < kSyncPairs.size(); ++p) {
      const double d = pair_distance(x, kSyncPairs[p].first, kSyncPairs[p].second);
      trackers_[p].observe(times_[j], d);
      if (path == 0) sample_path_(static_cast<Index>(j), static_cast<Index>(p)) = d;
    }
  }

  void end_path(std::size_t path, bool diverged) override {
    gramian_.end_path(path, diverged);
    for (std::size_t p = 0; p < kSyncPairs.size(); ++p)
      settle_[p][path] = diverged ? std::numeric_limits<double>::quiet_NaN() : trackers_[p].settled();
  }

  const GramianSink& gramian() const { return gramian_; }

 private:
  GramianSink gramian_;
  const FhnExperimentConfig& cfg_;
  std::span<const double> times_;
  std::array<std::vector<double>, 3>& settle_;
  Matrix& sample_path_;
  std::vector<SettleTracker> trackers_;
};

}  // namespace

FhnReproduction run_fhn_reproduction(const FhnExperimentConfig& cfg, std::size_t workers) {
  const DynamicsModel model = cfg.model();
  check_sync_layout(model.dimension());
  const SnapshotSchedule schedule = cfg.schedule();
  const NoiseSpec noise{cfg.temperature, cfg.seed, cfg.paths};

  std::array<std::vector<double>, 3> settle;
  for (auto& s : settle) s.assign(cfg.paths, std::numeric_limits<double>::quiet_NaN());
  Matrix sample_path = Matrix::Zero(static_cast<Index>(schedule.size()), 3);

  workers = std::max<std::size_t>(1, std::min(workers, cfg.paths));
  std::vector<std::unique_ptr<SnapshotSink>> sinks;
  for (std::size_t w = 0; w < workers; ++w)
    sinks.push_back(std::make_unique<FhnSink>(cfg, schedule.times(), settle, sample_path));
  const StreamResult stream = stream_ensemble(model, noise, schedule, sinks);

  const std::size_t diverged = stream.divergences.size();
  if (static_cast<double>(diverged) > 0.01 * static_cast<double>(cfg.paths)) {
    std::ostringstream os;
    os << diverged << " of " << cfg.paths << " paths diverged (limit 1%); first: path "
       << stream.divergences.front().path << " at t=" << stream.divergences.front().time;
    throw NumericError(os.str());
  }

  GramianAccumulator total(model.dimension());
  std::size_t completed = 0;
  for (const auto& s : sinks) {
    const auto& g = static_cast<const FhnSink&>(*s).gramian();
    total.merge(g.total());
    completed += g.completed_paths();
  }
  GramianMatrix::Metadata meta;
  meta.provenance = Provenance::monte_carlo;
  meta.horizon = schedule.horizon();
  meta.snapshot_count = schedule.size();
  meta.temperature = cfg.temperature;
  meta.sample_count = completed;
  GramianMatrix gramian(total.sum() / static_cast<double>(completed), meta);

  ProjectionBasis basis = principal_basis(gramian, 2);
  CorrelationReport correlation = correlation_report(basis);

  FhnReproduction r{cfg, gramian, basis, correlation, {}, settle, sample_path, diverged, {}};
  for (std::size_t p = 0; p < 3; ++p) {
    std::vector<double> finite;
    for (double v : settle[p])
      if (!std::isnan(v)) finite.push_back(v);
    r.median_settle[p] = median(finite);
  }
  r.mismatches = check_verdict_pattern(correlation, cfg.temperature);
  return r;
}

Json fhn_report_json(const FhnReproduction& r) {
  Json j;
  j["experiment"] = "repro_fhn";
  j["version"] = kToolVersion;
  j["config"] = r.config.to_json();
  j["regime"] = is_low_temperature(r.config.temperature)    ? "low"
                : is_high_temperature(r.config.temperature) ? "high"
                                                            : "custom";
  j["diverged_paths"] = r.diverged_paths;
  j["gramian"] = gramian_json(r.gramian);
  j["basis"] = basis_json(r.basis);
  j["eigenvalue_ratios"] = to_std(r.correlation.eigenvalue_ratios);
  Json blocks = Json::array();
  for (const auto& b : r.correlation.blocks) blocks.push_back(matrix_rows(b));
  j["blocks"] = blocks;
  Json pairs = Json::array();
  for (const auto& p : r.correlation.pairs)
    pairs.push_back({{"pair", {p.first, p.second}}, {"similarity", p.score}, {"verdict", to_string(p.verdict)}});
  j["similarities"] = pairs;
  j["thresholds"] = {{"approx_equal_above", kApproxEqualThreshold},
                     {"not_approx_equal_below", kNotApproxEqualThreshold},
                     {"eigenvalue_ratio_bound", kEigenvalueRatioBound}};
  j["relation_v1_v3"] = r.correlation.relation.size() ? matrix_rows(r.correlation.relation) : Json(nullptr);
  j["relation_loosely_matches_reference"] = r.correlation.relation_loosely_matches;
  Json sync = Json::array();
  for (std::size_t p = 0; p < 3; ++p) {
    std::size_t settled = 0;
    for (double v : r.settle[p]) settled += std::isfinite(v) ? 1 : 0;
    sync.push_back({{"pair", {kSyncPairs[p].first, kSyncPairs[p].second}},
                    {"median_settle_time", finite_or_null(r.median_settle[p])},
                    {"settled_fraction", static_cast<double>(settled) / static_cast<double>(r.settle[p].size())}});
  }
  j["synchronization"] = {{"threshold", r.config.sync_threshold}, {"hold", r.config.sync_hold}, {"pairs", sync}};
  j["mismatches"] = r.mismatches;
  j["passed"] = r.passed();
  return j;
}

Json LinearValidationConfig::to_json() const {
  return {{"A", matrix_rows(system.A)},
          {"B", matrix_rows(system.B)},
          {"x0", to_std(initial_state)},
          {"temperature", temperature},
          {"tau", tau},
          {"dt", dt},
          {"paths", paths},
          {"seed", seed},
          {"replicates", replicates},
          {"max_relative_error", max_relative_error}};
}

LinearValidation run_linear_validation(const LinearValidationConfig& cfg, std::size_t workers) {
  if (cfg.replicates < 1) throw ConfigError("at least one replicate is required");
  const DynamicsModel model = build_linear(cfg.system.A, cfg.system.B, cfg.initial_state, "linear");
  const SnapshotSchedule schedule(std::vector<double>{cfg.tau}, cfg.dt);
  const double tau = schedule.horizon();

  LinearValidation v;
  v.config = cfg;
  const bool zero_start = cfg.initial_state.isZero(0.0);
  Matrix gramian;
  if (cfg.temperature > 0.0) {
    gramian = linear_gramian(cfg.system, tau).matrix();
    const Vector mean = matrix_exponential(Matrix(tau * cfg.system.A)) * cfg.initial_state;
    v.target = cfg.temperature * gramian + mean * mean.transpose();
    v.target_kind = zero_start ? "T*G_tau" : "T*G_tau + m m^T";
  } else {
    const auto path = deterministic_trajectory(model, schedule);
    const Vector x = path.state(0, 0);
    v.target = x * x.transpose();
    v.target_kind = "x(tau) x(tau)^T";
  }

  auto error_of = [&](const Matrix& mc) {
    if (cfg.temperature > 0.0 && zero_start)
      return (mc / cfg.temperature - gramian).norm() / gramian.norm();
    const double scale = v.target.norm();
    return scale > 0.0 ? (mc - v.target).norm() / scale : (mc - v.target).norm();
  };

  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    const std::uint64_t seed = r == 0 ? cfg.seed : mix_seed(cfg.seed + r);
    SimulationOptions opts;
    opts.workers = workers;
    const auto ens = simulate_ensemble(model, {cfg.temperature, seed, cfg.paths}, schedule, {}, opts);
    const Matrix mc = empirical_gibbs_gramian(ens, tau).matrix();
    if (r == 0) v.monte_carlo = mc;
    v.replicate_errors.push_back(error_of(mc));
  }
  v.relative_error = v.replicate_errors.front();
  const auto& e = v.replicate_errors;
  v.band_low = *std::min_element(e.begin(), e.end());
  v.band_high = *std::max_element(e.begin(), e.end());
  v.band_mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
  double var = 0.0;
  for (double x : e) var += (x - v.band_mean) * (x - v.band_mean);
  v.band_stddev = e.size() > 1 ? std::sqrt(var / static_cast<double>(e.size() - 1)) : 0.0;
  return v;
}

Json linear_report_json(const LinearValidation& v) {
  Json j;
  j["experiment"] = "validate_linear";
  j["version"] = kToolVersion;
  j["config"] = v.config.to_json();
  j["relative_error"] = v.relative_error;
  j["target"] = v.target_kind;
  j["path_count"] = v.config.paths;
  j["dt"] = v.config.dt;
  j["confidence_band"] = {{"replicates", v.replicate_errors.size()},
                          {"errors", v.replicate_errors},
                          {"min", v.band_low},
                          {"max", v.band_high},
                          {"mean", v.band_mean},
                          {"stddev", v.band_stddev}};
  j["monte_carlo"] = matrix_rows(v.monte_carlo);
  j["expected"] = matrix_rows(v.target);
  j["passed"] = v.passed();
  return j;
}

std::filesystem::path run_directory_name(const std::string& experiment, std::uint64_t seed) {
  return experiment + "_seed" + std::to_string(seed);
}

std::filesystem::path write_fhn_run(const std::filesystem::path& out, const FhnReproduction& r,
                                    const Json& extra) {
  RunDirectory dir(out / run_directory_name("repro_fhn", r.config.seed));
  write_json(dir.file("report.json"), fhn_report_json(r));
  write_matrix_csv(dir.file("gramian.csv"), r.gramian.matrix());
  write_matrix_csv(dir.file("basis.csv"), r.basis.basis);
  {
    std::ofstream os(dir.file("sync_sample_path.csv"), std::ios::trunc);
    os.precision(17);
    os << "t,d12,d34,d23\n";
    const SnapshotSchedule schedule = r.config.schedule();
    const auto times = schedule.times();
    for (Index j = 0; j < r.sample_path_sync.rows(); ++j)
      os << times[static_cast<std::size_t>(j)] << ',' << r.sample_path_sync(j, 0) << ','
         << r.sample_path_sync(j, 1) << ',' << r.sample_path_sync(j, 2) << '\n';
  }
  {
    std::ofstream os(dir.file("sync_settle_times.csv"), std::ios::trunc);
    os.precision(17);
    os << "path,settle12,settle34,settle23\n";
    for (std::size_t k = 0; k < r.settle[0].size(); ++k)
      os << k << ',' << r.settle[0][k] << ',' << r.settle[1][k] << ',' << r.settle[2][k] << '\n';
  }
  Json header = {{"experiment", "repro_fhn"},
                 {"version", kToolVersion},
                 {"seed", r.config.seed},
                 {"config", r.config.to_json()}};
  header.update(extra);
  return dir.write_manifest(header);
}

std::filesystem::path write_linear_run(const std::filesystem::path& out, const LinearValidation& v,
                                       const Json& extra) {
  RunDirectory dir(out / run_directory_name("validate_linear", v.config.seed));
  write_json(dir.file("report.json"), linear_report_json(v));
  write_matrix_csv(dir.file("gramian_mc.csv"), v.monte_carlo);
  write_matrix_csv(dir.file("gramian_expected.csv"), v.target);
  Json header = {{"experiment", "validate_linear"},
                 {"version", kToolVersion},
                 {"seed", v.config.seed},
                 {"config", v.config.to_json()}};
  header.update(extra);
  return dir.write_manifest(header);
}

}  // namespace gibbs
