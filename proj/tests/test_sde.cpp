#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gibbsgram/errors.hpp"
#include "gibbsgram/sde.hpp"
#include "gibbsgram/snapshot_io.hpp"

#include "oracles.hpp"

using namespace gibbs;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "gibbsgram_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("sde") {
  TEST_CASE("worker count does not change the ensemble") {
    const auto model = build_fhn(fhn_reference_coupling(), Matrix::Ones(4, 1), fhn_reference_initial_state());
    const auto sched = SnapshotSchedule::range(0.5, 0.5, 5.0, 0.01);
    const NoiseSpec noise{0.25, 77, 37};
    const auto one = simulate_ensemble(model, noise, sched, {}, {1});
    for (std::size_t w : {2u, 3u, 8u, 64u}) CHECK(simulate_ensemble(model, noise, sched, {}, {w}) == one);
    const auto other_seed = simulate_ensemble(model, {0.25, 78, 37}, sched);
    CHECK_FALSE(other_seed == one);
  }

  TEST_CASE("path k depends only on (seed, k)") {
    const auto model = build_linear(oracle::mat({{-1}}), oracle::mat({{1}}), oracle::vec({0}));
    const SnapshotSchedule sched({1.0}, 0.01);
    const auto small = simulate_ensemble(model, {1.0, 5, 10}, sched);
    const auto large = simulate_ensemble(model, {1.0, 5, 1000}, sched);
    for (std::size_t k = 0; k < 10; ++k) CHECK(small.state(k, 0)[0] == large.state(k, 0)[0]);
  }

  TEST_CASE("worker slices cover the paths contiguously") {
    for (std::size_t paths : {1u, 7u, 100u})
      for (std::size_t workers : {1u, 3u, 8u}) {
        std::size_t next = 0;
        for (std::size_t w = 0; w < workers; ++w) {
          const auto [begin, end] = worker_slice(paths, workers, w);
          CHECK(begin == next);
          CHECK(end >= begin);
          next = end;
        }
        CHECK(next == paths);
      }
  }

  TEST_CASE("Ornstein-Uhlenbeck variance") {
    // dx = -x dt + sqrt(T) dW, x0 = 0: Var x(t) = T (1 - e^{-2t}) / 2; Euler bias O(dt).
    const auto model = build_linear(oracle::mat({{-1}}), oracle::mat({{1}}), oracle::vec({0}));
    const auto ens = simulate_ensemble(model, {1.0, 2, 100000}, SnapshotSchedule({1.0}, 1e-3));
    double m2 = 0;
    for (std::size_t k = 0; k < ens.path_count(); ++k) m2 += std::pow(ens.state(k, 0)[0], 2);
    m2 /= static_cast<double>(ens.path_count());
    const double expected = (1 - std::exp(-2.0)) / 2;
    CHECK(std::abs(m2 - expected) / expected < 0.02);
  }

  TEST_CASE("deterministic rotation conserves the norm to first order") {
    const auto model = build_linear(oracle::mat({{0, 1}, {-1, 0}}), oracle::mat({{0}, {1}}), oracle::vec({1, 0}));
    const double dt = 1e-3;
    const auto path = deterministic_trajectory(model, SnapshotSchedule::range(1, 1, 10, dt));
    for (std::size_t j = 0; j < path.time_count(); ++j) {
      const double t = path.schedule().times()[j];
      // explicit Euler multiplies the norm by sqrt(1 + dt^2) per step
      CHECK(path.state(0, j).norm() == doctest::Approx(std::pow(1 + dt * dt, 0.5 * t / dt)).epsilon(1e-9));
      CHECK(path.state(0, j).norm() - 1.0 < 2 * dt * t);
    }
  }

  TEST_CASE("single neuron settles onto its limit cycle") {
    const auto neuron = build_fhn(oracle::mat({{0}}), oracle::mat({{1}}), oracle::vec({-1, 0}));
    const double dt = 0.01;
    const auto path = deterministic_trajectory(neuron, SnapshotSchedule::range(dt, dt, 200, dt));
    // estimate the period from upward zero crossings of v in the second half
    std::vector<double> crossings;
    for (std::size_t j = 10000; j + 1 < path.time_count(); ++j)
      if (path.state(0, j)[0] < 0 && path.state(0, j + 1)[0] >= 0) crossings.push_back(path.schedule().times()[j]);
    REQUIRE(crossings.size() >= 3);
    const double period = crossings[crossings.size() - 1] - crossings[crossings.size() - 2];
    const auto steps = static_cast<std::size_t>(std::lround(period / dt));
    const std::size_t j = path.time_count() - 1 - steps;
    CHECK((path.state(0, j + steps) - path.state(0, j)).norm() < 1e-2);
    CHECK(std::abs(crossings[crossings.size() - 2] - crossings[crossings.size() - 3] - period) < 0.05);
  }

  TEST_CASE("noiseless ensembles repeat the deterministic path") {
    const auto model = build_linear(oracle::mat({{-1}}), oracle::mat({{1}}), oracle::vec({2}));
    const SnapshotSchedule sched({0.5}, 0.01);
    const auto ens = simulate_ensemble(model, {0.0, 1, 4}, sched);
    const double x = deterministic_trajectory(model, sched).state(0, 0)[0];
    for (std::size_t k = 0; k < 4; ++k) CHECK(ens.state(k, 0)[0] == x);
    CHECK(x == doctest::Approx(2 * std::pow(0.99, 50)).epsilon(1e-14));
  }

  TEST_CASE("open-loop input enters through the gain") {
    const auto model = build_linear(oracle::mat({{0}}), oracle::mat({{2}}), oracle::vec({0}));
    const InputFn u = [](double, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) { out[0] = 1.5; };
    const auto ens = simulate_ensemble(model, {0.0, 1, 1}, SnapshotSchedule({1.0}, 0.01), u);
    CHECK(ens.state(0, 0)[0] == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("negative temperature is rejected") {
    const auto model = build_linear(oracle::mat({{-1}}), oracle::mat({{1}}), oracle::vec({0}));
    CHECK_THROWS_AS(simulate_ensemble(model, {-1.0, 1, 1}, SnapshotSchedule({1.0}, 0.01)), ConfigError);
    CHECK_THROWS_AS(simulate_ensemble(model, {1.0, 1, 0}, SnapshotSchedule({1.0}, 0.01)), ConfigError);
  }

  TEST_CASE("divergence names path, time and last finite state") {
    const auto blowup = build_expression_model({"x1^2"}, {{"1"}}, oracle::vec({1}));
    try {
      simulate_ensemble(blowup, {0.0, 1, 3}, SnapshotSchedule({2.0}, 0.01));
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(e.path() == 0);
      CHECK(e.time() > 0.9);
      CHECK(e.time() < 1.2);
      REQUIRE(e.last_finite_state().size() == 1);
      CHECK(std::isfinite(e.last_finite_state()[0]));
      CHECK(std::string(e.what()).find("path 0") != std::string::npos);
    }
  }

  TEST_CASE("streaming reports diverged paths without aborting") {
    struct Counter : SnapshotSink {
      std::size_t ended = 0, diverged = 0;
      void record(std::size_t, std::size_t, const Eigen::Ref<const Vector>&) override {}
      void end_path(std::size_t, bool d) override {
        ++ended;
        diverged += d;
      }
    };
    const auto blowup = build_expression_model({"x1^2"}, {{"1"}}, oracle::vec({1}));
    std::vector<std::unique_ptr<SnapshotSink>> sinks;
    sinks.push_back(std::make_unique<Counter>());
    sinks.push_back(std::make_unique<Counter>());
    const auto result = stream_ensemble(blowup, {0.0, 1, 5}, SnapshotSchedule({2.0}, 0.01), sinks);
    CHECK(result.divergences.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(result.divergences[k].path == k);
    const auto& a = static_cast<const Counter&>(*sinks[0]);
    const auto& b = static_cast<const Counter&>(*sinks[1]);
    CHECK(a.ended + b.ended == 5);
    CHECK(a.diverged + b.diverged == 5);
  }

  TEST_CASE("binary snapshot round trip") {
    const auto model = build_linear(oracle::mat({{-1, 0}, {0, -2}}), oracle::mat({{1}, {1}}), oracle::vec({0, 0}));
    const auto ens = simulate_ensemble(model, {0.5, 3, 17}, SnapshotSchedule({0.5, 1.0, 1.5}, 0.01));
    const auto file = scratch("roundtrip.bin");
    write_snapshots_binary(file, ens);
    CHECK(std::filesystem::file_size(file) == 5 + 24 + 17 * 3 * 2 * 8);
    const auto raw = read_snapshots_binary(file);
    CHECK(raw.path_count == 17);
    CHECK(raw.time_count == 3);
    CHECK(raw.dimension == 2);
    CHECK(raw.data == ens.data());

    std::ifstream is(file, std::ios::binary);
    char magic[5];
    is.read(magic, 5);
    CHECK(std::string(magic, 5) == "GKSN1");
  }

  TEST_CASE("truncated or foreign binary files are rejected") {
    const auto file = scratch("bad.bin");
    {
      std::ofstream os(file, std::ios::binary);
      os << "GKSN1" << std::string(10, '\0');
    }
    CHECK_THROWS_AS(read_snapshots_binary(file), Error);
    {
      std::ofstream os(file, std::ios::binary);
      os << "NOPE!" << std::string(24, '\0');
    }
    CHECK_THROWS_AS(read_snapshots_binary(file), Error);
  }

  TEST_CASE("CSV export") {
    const auto model = build_linear(oracle::mat({{-1}}), oracle::mat({{1}}), oracle::vec({0}));
    const auto ens = simulate_ensemble(model, {1.0, 3, 2}, SnapshotSchedule({0.5, 1.0}, 0.01));
    const auto file = scratch("snap.csv");
    write_snapshots_csv(file, ens);
    std::ifstream is(file);
    std::string header, row;
    std::getline(is, header);
    CHECK(header == "path,t,x1");
    int rows = 0;
    while (std::getline(is, row)) ++rows;
    CHECK(rows == 4);
  }
}
