#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gibbsgram/dynamics.hpp"
#include "gibbsgram/experiments.hpp"
#include "gibbsgram/fokker_planck.hpp"
#include "gibbsgram/gramian.hpp"
#include "gibbsgram/report_io.hpp"
#include "gibbsgram/sde.hpp"

namespace gibbs {

struct ModelSection {
  std::string kind;  // linear | fhn | expression
  DynamicsModel model;
  Json echo;
};

struct ScheduleSection {
  struct Range {
    double start, step, stop;
  };
  double dt = 0.0;
  std::optional<Range> range;
  /// Absent when only dt was given.
  std::optional<SnapshotSchedule> schedule;
};

struct GramianSection {
  enum class Mode { summed, at_time };
  Mode mode = Mode::summed;
  std::optional<double> time;
  Reference reference = Reference::origin;
  /// Binary snapshot file to read instead of simulating.
  std::optional<std::filesystem::path> snapshots;
};

struct ReduceSection {
  Index k = 2;
};

struct OracleSection {
  double tau = 0.0;
  GridSpec grid;
  int bins = 40;
  double max_l1 = 0.05;
  double max_gramian_rel_error = 0.05;
  EvolveOptions evolve;
};

struct SyncSection {
  double threshold = 0.1;
  double hold = 10.0;
};

struct ValidateSection {
  double tau = 0.0;
  std::size_t replicates = 10;
  double max_relative_error = 0.05;
};

/// Parsed run configuration. Every section is optional at parse time; each
/// command checks for the sections it needs.
struct RunConfig {
  std::filesystem::path source;
  std::string source_sha256;
  std::optional<ModelSection> model;
  std::optional<NoiseSpec> noise;
  std::optional<ScheduleSection> schedule;
  std::optional<GramianSection> gramian;
  std::optional<ReduceSection> reduce;
  std::optional<OracleSection> oracle;
  std::optional<SyncSection> fhn;
  std::optional<ValidateSection> validate;
  /// Fully resolved configuration with every default filled in.
  Json echo;

  const ModelSection& require_model() const;
  const NoiseSpec& require_noise() const;
  const ScheduleSection& require_schedule() const;
  /// Schedule with explicit times (times list or range).
  const SnapshotSchedule& require_times() const;
};

/// Strict YAML parsing: unknown keys, wrong types and invalid values raise
/// ConfigError with the key path and line.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_run_config(const std::filesystem::path& file);

/// Replaces the noise seed and updates the echo.
void override_seed(RunConfig& cfg, std::uint64_t seed);

FhnExperimentConfig fhn_experiment_config(const RunConfig& cfg);
LinearValidationConfig linear_validation_config(const RunConfig& cfg);

}  // namespace gibbs
