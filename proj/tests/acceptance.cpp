// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--expect-fail AC<n>]...
//
// Exits 0 when the set of failing criteria equals the set named with
// --expect-fail (empty by default), 1 otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gibbsgram/experiments.hpp"
#include "gibbsgram/fokker_planck.hpp"
#include "gibbsgram/gramian.hpp"
#include "gibbsgram/reduction.hpp"

#include "oracles.hpp"

using namespace gibbs;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::map<std::string, bool> results;

void verdict(const std::string& id, bool pass, const std::string& detail) {
  results[id] = pass;
  std::cout << id << ' ' << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string slurp(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gibbsgram_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

LinearValidationConfig two_mode_config() {
  LinearValidationConfig cfg;
  cfg.system = {oracle::mat({{-1, 0}, {0, -2}}), oracle::mat({{1}, {1}})};
  cfg.initial_state = oracle::vec({0, 0});
  cfg.temperature = 0.5;
  cfg.tau = 2.0;
  cfg.dt = 1e-3;
  cfg.paths = 100000;
  cfg.seed = 1;
  cfg.replicates = 1;
  return cfg;
}

void ac1() {
  const auto start = Clock::now();
  const auto v = run_linear_validation(two_mode_config());
  const double elapsed = seconds_since(start);
  verdict("AC1", v.relative_error < 0.05 && elapsed < 60.0,
          fmt("linear 2-D: |MC/T - G|_F/|G|_F = %.4f (< 0.05), %.1f s (< 60 s)", v.relative_error, elapsed));
}

void ac2() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix2d X = Eigen::Matrix2d::NullaryExpr([&] { return n01(rng); });
    const Eigen::Matrix2d G = X * X.transpose() + 0.1 * Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d Ginv = G.inverse();
    const ScalarField L = [&](const Eigen::Ref<const Vector>& x) { return 0.5 * x.dot(Ginv * x); };
    const Vector half = 10.0 * G.diagonal().cwiseSqrt();
    const auto Q = gibbs_gramian_quadrature(L, {-half, half}, 401);
    worst = std::max(worst, (Q.matrix() - Matrix(G)).norm());
  }
  verdict("AC2", worst < 1e-6, fmt("quadratic L, 20 random SPD G: max |G_quad - G|_F = %.2e (< 1e-6)", worst));
}

void ac3() {
  const ScalarField L = [](const Eigen::Ref<const Vector>& x) { return std::pow(x[0], 4); };
  const double q = gibbs_gramian_quadrature(L, {oracle::vec({-6}), oracle::vec({6})}, 2001).matrix()(0, 0);
  const double ref = oracle::quartic_second_moment();
  const bool pass = std::abs(q - 0.337989) <= 1e-4 && std::abs(q - ref) <= 1e-4;
  verdict("AC3", pass, fmt("L = x^4: G = %.6f, adaptive oracle %.6f, target 0.337989 +- 1e-4", q, ref));
}

void ac4() {
  const auto start = Clock::now();
  const auto model = build_expression_model({"x1 - x1^3"}, {{"1"}}, oracle::vec({0}), "double-well");
  const double T = 0.5, tau = 2.0;
  const auto ens = simulate_ensemble(model, {T, 1, 100000}, SnapshotSchedule({tau}, 1e-3));
  const GridSpec grid{oracle::vec({-3}), oracle::vec({3}), {601}};
  const auto r = crosscheck_theorem(model, T, oracle::vec({0}), tau, ens, grid, 40);
  const double elapsed = seconds_since(start);
  verdict("AC4", r.l1_distance < 0.05 && r.gramian_rel_error < 0.05 && elapsed < 300.0,
          fmt("double well: L1(hist, FP) = %.4f (< 0.05), Gramian vs second moment %.4f (< 0.05), %.1f s (< 300 s)",
              r.l1_distance, r.gramian_rel_error, elapsed));
}

struct FhnRuns {
  std::vector<FhnReproduction> low, high;
  double low_seconds = 0.0, high_seconds = 0.0;
};

FhnRuns run_fhn(const std::vector<std::uint64_t>& seeds) {
  FhnRuns runs;
  for (const double T : {kLowTemperature, kHighTemperature}) {
    const auto start = Clock::now();
    for (auto seed : seeds) {
      FhnExperimentConfig cfg;
      cfg.temperature = T;
      cfg.seed = seed;
      (T == kLowTemperature ? runs.low : runs.high).push_back(run_fhn_reproduction(cfg));
    }
    (T == kLowTemperature ? runs.low_seconds : runs.high_seconds) = seconds_since(start);
  }
  return runs;
}

double worst_ratio(const std::vector<FhnReproduction>& runs) {
  double worst = 0.0;
  for (const auto& r : runs)
    for (Index i = 2; i < r.correlation.eigenvalue_ratios.size(); ++i)
      worst = std::max(worst, r.correlation.eigenvalue_ratios[i]);
  return worst;
}

void ac5(const FhnRuns& runs) {
  const double low = worst_ratio(runs.low), high = worst_ratio(runs.high);
  std::string per_seed;
  for (const auto& r : runs.low) per_seed += fmt(" %.4f", r.correlation.eigenvalue_ratios[2]);
  const bool pass = low < kEigenvalueRatioBound && high < kEigenvalueRatioBound && runs.low_seconds < 900.0 &&
                    runs.high_seconds < 900.0;
  verdict("AC5", pass,
          fmt("max lambda_i/lambda_1 (i >= 3) over %zu seeds: T_L %.4f, T_H %.4f (< 0.15); T_L lambda3/lambda1 per "
              "seed:%s; %.0f s / %.0f s per temperature (< 900 s)",
              runs.low.size(), low, high, per_seed.c_str(), runs.low_seconds, runs.high_seconds));
}

void ac6(const FhnRuns& runs) {
  bool pass = true;
  std::string detail;
  auto check = [&](const FhnReproduction& r, int a, int b, Verdict want) {
    const auto& p = r.correlation.pair(a, b);
    if (p.verdict != want) {
      pass = false;
      detail += fmt(" [T=%g seed %llu rho%d,rho%d %s]", r.config.temperature,
                    static_cast<unsigned long long>(r.config.seed), a, b, to_string(p.verdict).c_str());
    }
  };
  double low12 = 1, low34 = 1, low23 = 0, high_min = 1;
  for (const auto& r : runs.low) {
    check(r, 1, 2, Verdict::approx_equal);
    check(r, 3, 4, Verdict::approx_equal);
    check(r, 2, 3, Verdict::not_approx_equal);
    low12 = std::min(low12, r.correlation.pair(1, 2).score);
    low34 = std::min(low34, r.correlation.pair(3, 4).score);
    low23 = std::max(low23, r.correlation.pair(2, 3).score);
  }
  for (const auto& r : runs.high)
    for (const auto& p : r.correlation.pairs) {
      check(r, p.first, p.second, Verdict::approx_equal);
      high_min = std::min(high_min, p.score);
    }
  verdict("AC6", pass,
          fmt("verdicts over %zu seeds: T_L min sim(1,2) %.4f, min sim(3,4) %.4f, max sim(2,3) %.4f; T_H min sim %.5f",
              runs.low.size(), low12, low34, low23, high_min) +
              detail);
}

void ac7(const FhnRuns& runs) {
  const double quick = 0.1 * FhnExperimentConfig{}.time_stop;
  bool pass = true;
  std::string detail;
  for (std::size_t s = 0; s < runs.low.size(); ++s) {
    const auto& lo = runs.low[s].median_settle;
    const auto& hi = runs.high[s].median_settle;
    const bool cross = std::isinf(lo[2]) || (std::isfinite(hi[2]) && 10.0 * hi[2] <= lo[2]);
    const bool fast = lo[0] < quick && lo[1] < quick && hi[0] < quick && hi[1] < quick;
    pass = pass && cross && fast;
    detail += fmt(" seed %llu: (2,3) T_H %.1f vs T_L %.1f, (1,2)/(3,4) T_L %.1f/%.1f T_H %.1f/%.1f;",
                  static_cast<unsigned long long>(runs.low[s].config.seed), hi[2], lo[2], lo[0], lo[1], hi[0], hi[1]);
  }
  verdict("AC7", pass, "median settle times (quick < " + fmt("%g", quick) + "):" + detail);
}

EnsembleSnapshots fhn_ensemble() {
  FhnExperimentConfig cfg;
  cfg.temperature = kHighTemperature;
  cfg.paths = 200;
  cfg.time_stop = 100.0;
  return simulate_ensemble(cfg.model(), {cfg.temperature, 11, cfg.paths}, cfg.schedule());
}

void ac8(const EnsembleSnapshots& ens) {
  const GramianMatrix G = snapshot_summed_gramian(ens);
  const double total = G.matrix().trace();
  double worst = 0.0;
  for (Index k = 1; k <= G.dimension(); ++k) {
    const auto rho = principal_basis(G, k);
    const double captured = (rho.basis.transpose() * G.matrix() * rho.basis).trace();
    worst = std::max(worst, std::abs(projection_error(ens, rho) + captured - total) / total);
  }
  verdict("AC8", worst <= 1e-9,
          fmt("FHN ensemble, k = 1..%ld: max |err + Tr(rho^T G rho) - Tr G| / Tr G = %.2e (<= 1e-9)",
              static_cast<long>(G.dimension()), worst));
}

void ac9(const EnsembleSnapshots& ens) {
  const double tau = ens.schedule().horizon();
  const auto rho = principal_basis(empirical_gibbs_gramian(ens, tau), 1);
  const double l1 = rho.eigenvalues[0];
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01;
  double max_excess = -std::numeric_limits<double>::infinity();
  for (int draw = 0; draw < 500; ++draw) {
    Vector e = Vector::NullaryExpr(ens.dimension(), [&] { return n01(rng); });
    e.normalize();
    max_excess = std::max(max_excess, directional_reach_score(ens, e, tau) - l1);
  }
  const double at_top = directional_reach_score(ens, rho.basis.col(0), tau);
  const double top_gap = std::abs(at_top - l1);
  verdict("AC9", max_excess <= 1e-10 && top_gap <= 1e-10 * std::max(1.0, l1),
          fmt("500 unit directions: max(score - lambda1) = %.3e (<= 1e-10); |score(e1) - lambda1| = %.2e", max_excess,
              top_gap));
}

void ac10(const FhnReproduction& low_seed1) {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b"), c = scratch("workers");
  const auto ma = write_fhn_run(a, low_seed1);
  const auto mb = write_fhn_run(b, run_fhn_reproduction(low_seed1.config, 1));
  const auto mc = write_fhn_run(c, run_fhn_reproduction(low_seed1.config, 3));
  const bool fhn_same = slurp(ma) == slurp(mb) && slurp(ma) == slurp(mc);

  const auto la = scratch("linear_1"), lb = scratch("linear_4");
  auto cfg = two_mode_config();
  cfg.paths = 20000;
  cfg.replicates = 2;
  const bool linear_same =
      slurp(write_linear_run(la, run_linear_validation(cfg, 1))) == slurp(write_linear_run(lb, run_linear_validation(cfg, 4)));
  verdict("AC10", fhn_same && linear_same,
          fmt("manifests byte-identical: FHN rerun + workers 1 vs 3 %s, linear workers 1 vs 4 %s",
              fhn_same ? "yes" : "no", linear_same ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> expected_failures;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      expected_failures.insert(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--expect-fail AC<n>]...\n";
      return 2;
    }
  }

  auto guarded = [](const std::string& id, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      verdict(id, false, std::string("exception: ") + e.what());
    }
  };

  guarded("AC1", ac1);
  guarded("AC2", ac2);
  guarded("AC3", ac3);
  guarded("AC4", ac4);

  FhnRuns runs;
  guarded("AC5", [&] {
    runs = run_fhn({1, 2, 3, 4, 5});
    ac5(runs);
  });
  if (!runs.low.empty()) {
    guarded("AC6", [&] { ac6(runs); });
    guarded("AC7", [&] { ac7(runs); });
  } else {
    verdict("AC6", false, "FHN runs unavailable");
    verdict("AC7", false, "FHN runs unavailable");
  }

  const auto ens = fhn_ensemble();
  guarded("AC8", [&] { ac8(ens); });
  guarded("AC9", [&] { ac9(ens); });
  if (!runs.low.empty())
    guarded("AC10", [&] { ac10(runs.low.front()); });
  else
    verdict("AC10", false, "FHN runs unavailable");

  std::set<std::string> failed;
  for (const auto& [id, pass] : results)
    if (!pass) failed.insert(id);
  std::cout << "summary: " << results.size() - failed.size() << "/" << results.size() << " criteria passed";
  if (!expected_failures.empty()) {
    std::cout << "; expected failures:";
    for (const auto& id : expected_failures) std::cout << ' ' << id;
  }
  std::cout << std::endl;
  return failed == expected_failures ? 0 : 1;
}
