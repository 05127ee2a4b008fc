// Command-line front end: one subcommand per pipeline, each writing a run
// directory <out>/<command>_seed<seed> with a SHA-256 manifest.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gibbsgram/config.hpp"
#include "gibbsgram/errors.hpp"
#include "gibbsgram/experiments.hpp"
#include "gibbsgram/fokker_planck.hpp"
#include "gibbsgram/gramian.hpp"
#include "gibbsgram/reduction.hpp"
#include "gibbsgram/report_io.hpp"
#include "gibbsgram/sde.hpp"
#include "gibbsgram/snapshot_io.hpp"

namespace {

using namespace gibbs;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

struct Options {
  std::string config;
  std::string out = "runs";
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed;
  std::string format = "binary";
};

RunConfig load(const Options& o) {
  RunConfig cfg = load_run_config(o.config);
  if (o.seed) override_seed(cfg, *o.seed);
  return cfg;
}

Json manifest_header(const std::string& command, const RunConfig& cfg) {
  return {{"command", command},
          {"version", kToolVersion},
          {"seed", cfg.noise ? Json(cfg.noise->seed) : Json(nullptr)},
          {"config_sha256", cfg.source_sha256},
          {"config", cfg.echo}};
}

std::uint64_t seed_of(const RunConfig& cfg) { return cfg.noise ? cfg.noise->seed : 0; }

Json snaps_json(const SnapshotSchedule& s) {
  Json arr = Json::array();
  for (const auto& snap : s.snaps())
    arr.push_back({{"index", snap.index}, {"requested", snap.requested}, {"snapped", snap.snapped}});
  return arr;
}

/// Ensemble from the configured snapshot file, or simulated from the model.
EnsembleSnapshots obtain_ensemble(const RunConfig& cfg, const Options& o) {
  const auto& model = cfg.require_model().model;
  const auto& schedule = cfg.require_times();
  const auto& noise = cfg.require_noise();
  if (cfg.gramian && cfg.gramian->snapshots) {
    const RawSnapshots raw = read_snapshots_binary(*cfg.gramian->snapshots);
    if (raw.dimension != static_cast<std::uint64_t>(model.dimension()))
      throw ConfigError("snapshot file " + cfg.gramian->snapshots->string() + " has dimension " +
                        std::to_string(raw.dimension) + " but the model has dimension " +
                        std::to_string(model.dimension()));
    if (raw.time_count != schedule.size())
      throw ConfigError("snapshot file has " + std::to_string(raw.time_count) +
                        " snapshot times but the schedule lists " + std::to_string(schedule.size()));
    NoiseSpec spec = noise;
    spec.path_count = raw.path_count;
    return EnsembleSnapshots(schedule, spec, model.label(), model.dimension(), raw.data);
  }
  SimulationOptions opts;
  opts.workers = o.workers;
  return simulate_ensemble(model, noise, schedule, {}, opts);
}

GramianMatrix configured_gramian(const RunConfig& cfg, const EnsembleSnapshots& ens) {
  const GramianSection g = cfg.gramian.value_or(GramianSection{});
  std::optional<Vector> reference;
  if (g.reference == Reference::initial_state) reference = cfg.require_model().model.initial_state();
  if (g.mode == GramianSection::Mode::at_time) return empirical_gibbs_gramian(ens, *g.time, reference);
  return snapshot_summed_gramian(ens, reference);
}

int cmd_simulate(const Options& o) {
  const RunConfig cfg = load(o);
  const auto& model = cfg.require_model().model;
  const auto& schedule = cfg.require_times();
  SimulationOptions opts;
  opts.workers = o.workers;
  const auto ens = simulate_ensemble(model, cfg.require_noise(), schedule, {}, opts);

  RunDirectory dir(std::filesystem::path(o.out) / run_directory_name("simulate", seed_of(cfg)));
  if (o.format == "binary" || o.format == "both") write_snapshots_binary(dir.file("snapshots.bin"), ens);
  if (o.format == "csv" || o.format == "both") write_snapshots_csv(dir.file("snapshots.csv"), ens);
  Json header = manifest_header("simulate", cfg);
  header["paths"] = ens.path_count();
  header["times"] = ens.time_count();
  header["dimension"] = ens.dimension();
  header["snapped_times"] = snaps_json(schedule);
  std::cout << dir.write_manifest(header).string() << '\n';
  return kExitOk;
}

int cmd_gramian(const Options& o) {
  const RunConfig cfg = load(o);
  const auto ens = obtain_ensemble(cfg, o);
  const GramianMatrix g = configured_gramian(cfg, ens);
  RunDirectory dir(std::filesystem::path(o.out) / run_directory_name("gramian", seed_of(cfg)));
  write_matrix_csv(dir.file("gramian.csv"), g.matrix());
  write_json(dir.file("gramian.json"), gramian_json(g));
  std::cout << dir.write_manifest(manifest_header("gramian", cfg)).string() << '\n';
  return kExitOk;
}

int cmd_reduce(const Options& o) {
  const RunConfig cfg = load(o);
  const auto ens = obtain_ensemble(cfg, o);
  const GramianMatrix g = configured_gramian(cfg, ens);
  const Index k = cfg.reduce ? cfg.reduce->k : 2;
  const ProjectionBasis basis = principal_basis(g, k);
  const ReducedModel reduced = galerkin_reduce(cfg.require_model().model, basis);

  Json report;
  report["k"] = k;
  report["projection_error"] = projection_error(ens, basis);
  report["captured_trace"] = (basis.basis.transpose() * g.matrix() * basis.basis).trace();
  report["total_trace"] = g.matrix().trace();
  report["reduced_model"] = {{"label", reduced.model.label()}, {"dimension", reduced.model.dimension()}};
  if (const auto& lin = reduced.model.linear()) {
    Json a = Json::array(), b = Json::array();
    for (Index i = 0; i < lin->A.rows(); ++i) {
      a.push_back(std::vector<double>(lin->A.cols()));
      for (Index j = 0; j < lin->A.cols(); ++j) a.back()[static_cast<std::size_t>(j)] = lin->A(i, j);
      b.push_back(std::vector<double>(lin->B.cols()));
      for (Index j = 0; j < lin->B.cols(); ++j) b.back()[static_cast<std::size_t>(j)] = lin->B(i, j);
    }
    report["reduced_model"]["A"] = a;
    report["reduced_model"]["B"] = b;
  }
  const Vector& z0 = reduced.model.initial_state();
  report["reduced_model"]["x0"] = std::vector<double>(z0.data(), z0.data() + z0.size());

  RunDirectory dir(std::filesystem::path(o.out) / run_directory_name("reduce", seed_of(cfg)));
  write_matrix_csv(dir.file("gramian.csv"), g.matrix());
  write_matrix_csv(dir.file("basis.csv"), basis.basis);
  write_json(dir.file("basis.json"), basis_json(basis));
  write_json(dir.file("reduction.json"), report);
  std::cout << dir.write_manifest(manifest_header("reduce", cfg)).string() << '\n';
  return kExitOk;
}

int cmd_oracle(const Options& o) {
  const RunConfig cfg = load(o);
  if (!cfg.oracle) throw ConfigError(cfg.source.string() + ": missing required section 'oracle'");
  const auto& oc = *cfg.oracle;
  const auto& model = cfg.require_model().model;
  const auto& noise = cfg.require_noise();
  const SnapshotSchedule schedule(std::vector<double>{oc.tau}, cfg.require_schedule().dt);
  SimulationOptions opts;
  opts.workers = o.workers;
  const auto ens = simulate_ensemble(model, noise, schedule, {}, opts);
  const Vector x0 = model.initial_state();
  const GridDensity rho = evolve_density(model, noise.temperature, x0, schedule.horizon(), oc.grid, oc.evolve);
  const CrosscheckReport report =
      crosscheck_theorem(model, noise.temperature, x0, schedule.horizon(), ens, oc.grid, oc.bins, oc.evolve);
  const ControllabilityField field = stochastic_controllability_on_grid(rho, noise.temperature);

  RunDirectory dir(std::filesystem::path(o.out) / run_directory_name("oracle", seed_of(cfg)));
  Json j = crosscheck_json(report);
  j["thresholds"] = {{"max_l1", oc.max_l1}, {"max_gramian_rel_error", oc.max_gramian_rel_error}};
  const bool passed = report.l1_distance < oc.max_l1 && report.gramian_rel_error < oc.max_gramian_rel_error;
  j["passed"] = passed;
  write_json(dir.file("crosscheck.json"), j);
  write_density_csv(dir.file("density.csv"), rho);
  {
    std::ofstream os(dir.file("controllability.csv"), std::ios::trunc);
    os.precision(17);
    os << "index,scaled,cost\n";
    for (std::size_t i = 0; i < field.scaled.size(); ++i)
      os << i << ',' << field.scaled[i] << ',' << field.cost[i] << '\n';
  }
  std::cout << dir.write_manifest(manifest_header("oracle", cfg)).string() << '\n';
  if (!passed) {
    std::cout << "--- expected\n+++ observed\n";
    if (!(report.l1_distance < oc.max_l1))
      std::cout << "-l1_distance < " << oc.max_l1 << "\n+l1_distance = " << report.l1_distance << '\n';
    if (!(report.gramian_rel_error < oc.max_gramian_rel_error))
      std::cout << "-gramian_rel_error < " << oc.max_gramian_rel_error
                << "\n+gramian_rel_error = " << report.gramian_rel_error << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_repro_fhn(const Options& o) {
  const RunConfig cfg = load(o);
  const FhnExperimentConfig fc = fhn_experiment_config(cfg);
  const FhnReproduction r = run_fhn_reproduction(fc, o.workers);
  Json extra = {{"command", "repro-fhn"}, {"config_sha256", cfg.source_sha256}};
  std::cout << write_fhn_run(o.out, r, extra).string() << '\n';
  for (const auto& p : r.correlation.pairs)
    std::cout << "rho" << p.first << " vs rho" << p.second << ": " << to_string(p.verdict)
              << " (similarity " << p.score << ")\n";
  if (!r.passed()) {
    std::cout << "--- expected\n+++ observed\n";
    for (const auto& m : r.mismatches) std::cout << "! " << m << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_validate_linear(const Options& o) {
  const RunConfig cfg = load(o);
  const LinearValidation v = run_linear_validation(linear_validation_config(cfg), o.workers);
  Json extra = {{"command", "validate-linear"}, {"config_sha256", cfg.source_sha256}};
  std::cout << write_linear_run(o.out, v, extra).string() << '\n';
  std::cout << "relative error " << v.relative_error << " (band " << v.band_low << " .. " << v.band_high
            << ")\n";
  if (!v.passed()) {
    std::cout << "--- expected\n+++ observed\n-relative_error < " << v.config.max_relative_error
              << "\n+relative_error = " << v.relative_error << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Gibbs Gramian toolkit"};
  app.require_subcommand(1);
  Options opts;

  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output root directory")->capture_default_str();
    sub->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { opts.seed = s; },
                                            "override the configured seed");
    return sub;
  };
  CLI::App* simulate = add("simulate", "simulate the noise-response ensemble");
  simulate->add_option("--format", opts.format, "snapshot format")
      ->check(CLI::IsMember({"csv", "binary", "both"}))
      ->capture_default_str();
  CLI::App* gramian = add("gramian", "empirical Gibbs Gramian");
  CLI::App* reduce = add("reduce", "principal basis and Galerkin model");
  CLI::App* oracle = add("oracle", "Fokker-Planck crosscheck of the Monte-Carlo ensemble");
  CLI::App* repro = add("repro-fhn", "FitzHugh-Nagumo correlation reproduction");
  CLI::App* validate = add("validate-linear", "Monte-Carlo vs analytic linear Gramian");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opts);
    if (gramian->parsed()) return cmd_gramian(opts);
    if (reduce->parsed()) return cmd_reduce(opts);
    if (oracle->parsed()) return cmd_oracle(opts);
    if (repro->parsed()) return cmd_repro_fhn(opts);
    if (validate->parsed()) return cmd_validate_linear(opts);
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitError;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
