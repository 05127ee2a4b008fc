#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "gibbsgram/fokker_planck.hpp"
#include "gibbsgram/gramian.hpp"
#include "gibbsgram/reduction.hpp"
#include "gibbsgram/report_io.hpp"
#include "gibbsgram/sde.hpp"

namespace gibbs {

inline constexpr const char* kToolVersion = "gibbsgram 1.0.0";

/// Noise temperatures 0.05^2 and 0.5^2.
inline constexpr double kLowTemperature = 0.0025;
inline constexpr double kHighTemperature = 0.25;

/// Which reference regime a temperature selects, if any (1e-9 relative match).
bool is_low_temperature(double t);
bool is_high_temperature(double t);

/// Block-similarity verdict thresholds: approx_equal above 0.99,
/// not_approx_equal below 0.90, inconclusive in between.
inline constexpr double kApproxEqualThreshold = 0.99;
inline constexpr double kNotApproxEqualThreshold = 0.90;
/// Eigenvalue ratios lambda_i / lambda_1, i >= 3, must stay below this.
inline constexpr double kEigenvalueRatioBound = 0.15;

/// Four coupled FitzHugh-Nagumo neurons driven by a common noisy input.
struct FhnExperimentConfig {
  Matrix coupling = fhn_reference_coupling();
  Vector initial_state = fhn_reference_initial_state();
  Matrix input_pattern = Matrix::Ones(4, 1);
  double temperature = kLowTemperature;
  double time_start = 0.1;
  double time_step = 0.1;
  double time_stop = 1000.0;
  double dt = 0.01;
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  /// Synchronization: difference norm below `sync_threshold` for `sync_hold` time units.
  double sync_threshold = 0.1;
  double sync_hold = 10.0;

  /// Names of the fields that differ from the defaults above (seed and
  /// temperature excluded: they select the run rather than alter the setup).
  std::vector<std::string> overrides() const;
  DynamicsModel model() const;
  SnapshotSchedule schedule() const;
  Json to_json() const;
};

enum class Verdict { approx_equal, not_approx_equal, inconclusive };
std::string to_string(Verdict v);
Verdict classify_similarity(double score);

struct PairSimilarity {
  int first;   // 1-based neuron index
  int second;
  double score;
  Verdict verdict;
};

/// Per-neuron 2 x 2 blocks of [e1 e2] and their pairwise similarity.
struct CorrelationReport {
  std::vector<Matrix> blocks;  // blocks[i] = rows (v_i, w_i) of [e1 e2]
  std::vector<PairSimilarity> pairs;
  Vector eigenvalue_ratios;    // lambda_i / lambda_1, i = 1..n
  /// M with v1 = M v3 inside span(e1, e2): mean(blocks 1,2) * mean(blocks 3,4)^-1.
  Matrix relation;
  bool relation_loosely_matches = false;

  const PairSimilarity& pair(int a, int b) const;
};

/// Absolute cosine similarity of the vectorized blocks.
double block_similarity(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

CorrelationReport correlation_report(const ProjectionBasis& basis);

/// Differences expected-vs-observed for the verdict pattern of a noise
/// level; empty when the pattern and the eigenvalue-ratio bound hold. Only
/// the low and high reference temperatures carry a verdict pattern.
std::vector<std::string> check_verdict_pattern(const CorrelationReport& report, double temperature);

/// First time at which a difference norm drops below the threshold and stays
/// there for `hold` time units; +inf if that never happens within the horizon.
class SettleTracker {
 public:
  SettleTracker(double threshold, double hold) : threshold_(threshold), hold_(hold) {}
  void observe(double t, double value);
  double settled() const { return settled_; }

 private:
  double threshold_, hold_;
  double run_start_ = std::numeric_limits<double>::quiet_NaN();
  double settled_ = std::numeric_limits<double>::infinity();
};

inline constexpr std::array<std::pair<int, int>, 3> kSyncPairs{{{1, 2}, {3, 4}, {2, 3}}};

struct SyncMetrics {
  /// series[p](path, time) = |v_i(t) - v_j(t)| for kSyncPairs[p].
  std::array<Matrix, 3> series;
  /// settle[p][path]
  std::array<std::vector<double>, 3> settle;
  std::array<double, 3> median_settle;
  double threshold = 0.1;
  double hold = 10.0;
};

double median(std::vector<double> values);

/// Pairwise neuron-state differences for (1,2), (3,4), (2,3) on an
/// interleaved [v1, w1, ..., vp, wp] layout with p >= 4.
SyncMetrics sync_metrics(const EnsembleSnapshots& ens, double threshold = 0.1, double hold = 10.0);

struct FhnReproduction {
  FhnExperimentConfig config;
  GramianMatrix gramian;
  ProjectionBasis basis;
  CorrelationReport correlation;
  std::array<double, 3> median_settle{};
  std::array<std::vector<double>, 3> settle;
  /// Difference norms of path 0 (times x 3).
  Matrix sample_path_sync;
  std::size_t diverged_paths = 0;
  std::vector<std::string> mismatches;

  bool passed() const { return mismatches.empty(); }
};

/// Streams the noise response, accumulates the snapshot-summed Gramian and the
/// synchronization statistics in one pass, and extracts the k = 2 basis.
/// Throws NumericError if more than 1% of the paths diverge.
FhnReproduction run_fhn_reproduction(const FhnExperimentConfig& cfg, std::size_t workers = 1);

Json fhn_report_json(const FhnReproduction& r);

struct LinearValidationConfig {
  LinearSystem system;
  Vector initial_state;
  double temperature = 0.5;
  double tau = 2.0;
  double dt = 1e-3;
  std::size_t paths = 100000;
  std::uint64_t seed = 1;
  std::size_t replicates = 10;
  double max_relative_error = 0.05;

  Json to_json() const;
};

struct LinearValidation {
  LinearValidationConfig config;
  /// Relative Frobenius error of the seed's own replicate.
  double relative_error = 0.0;
  std::vector<double> replicate_errors;
  double band_low = 0.0, band_high = 0.0, band_mean = 0.0, band_stddev = 0.0;
  Matrix monte_carlo;  // empirical Gramian of replicate 0
  Matrix target;       // T G_tau (+ m m^T for x0 != 0), or x x^T at T = 0
  std::string target_kind;

  bool passed() const { return relative_error < config.max_relative_error; }
};

/// Compares the Monte-Carlo Gramian with T G_tau. At x0 = 0 and T > 0 the
/// error is |MC/T - G_tau|_F / |G_tau|_F; at T = 0 the target is the
/// deterministic x(tau) x(tau)^T.
LinearValidation run_linear_validation(const LinearValidationConfig& cfg, std::size_t workers = 1);

Json linear_report_json(const LinearValidation& v);

/// "<experiment>_seed<seed>"
std::filesystem::path run_directory_name(const std::string& experiment, std::uint64_t seed);

/// Emit report.json, CSV artifacts and manifest.json under out/<run dir>.
/// Returns the manifest path.
/// `extra` is merged into the manifest header.
std::filesystem::path write_fhn_run(const std::filesystem::path& out, const FhnReproduction& r,
                                    const Json& extra = Json::object());
std::filesystem::path write_linear_run(const std::filesystem::path& out, const LinearValidation& v,
                                       const Json& extra = Json::object());

}  // namespace gibbs
