#include <doctest.h>

#include <cmath>
#include <random>

#include "gibbsgram/errors.hpp"
#include "gibbsgram/reduction.hpp"

#include "oracles.hpp"

using namespace gibbs;

namespace {

GramianMatrix gram(const Matrix& m) { return GramianMatrix(m, {}); }

Matrix random_orthonormal(Index n, Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  const Matrix X = Matrix::NullaryExpr(n, k, [&] { return n01(rng); });
  return Eigen::HouseholderQR<Matrix>(X).householderQ() * Matrix::Identity(n, k);
}

EnsembleSnapshots linear_ensemble(std::size_t paths = 400) {
  const auto model = build_linear(oracle::mat({{-1, 0.3, 0}, {0, -2, 0.5}, {0.2, 0, -0.5}}),
                                  oracle::mat({{1}, {0.5}, {-1}}), oracle::vec({0.2, 0, -0.1}));
  return simulate_ensemble(model, {0.7, 21, paths}, SnapshotSchedule::range(0.25, 0.25, 3.0, 0.01));
}

}  // namespace

TEST_SUITE("reduction") {
  TEST_CASE("principal basis of simple matrices") {
    const auto diag = principal_basis(gram(oracle::mat({{3, 0}, {0, 1}})), 1);
    CHECK(diag.basis == oracle::mat({{1}, {0}}));
    CHECK(diag.eigenvalues == oracle::vec({3, 1}));

    const auto sym = principal_basis(gram(oracle::mat({{2, 1}, {1, 2}})), 1);
    CHECK(sym.basis(0, 0) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(sym.basis(1, 0) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(sym.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(sym.explained_fraction()[0] == doctest::Approx(0.75).epsilon(1e-14));
  }

  TEST_CASE("k out of range") {
    CHECK_THROWS_AS(principal_basis(gram(Matrix::Identity(3, 3)), 0), ConfigError);
    CHECK_THROWS_AS(principal_basis(gram(Matrix::Identity(3, 3)), 4), ConfigError);
  }

  TEST_CASE("ties are broken deterministically") {
    const auto a = principal_basis(gram(Matrix::Identity(3, 3)), 3);
    CHECK(a.basis == Matrix::Identity(3, 3));
    const auto b = principal_basis(gram(oracle::mat({{2, 0, 0}, {0, 5, 0}, {0, 0, 2}})), 3);
    CHECK(b.basis == oracle::mat({{0, 1, 0}, {1, 0, 0}, {0, 0, 1}}));
  }

  TEST_CASE("bases are orthonormal, sign normalized and reproducible") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
      const Index n = 2 + trial % 7;
      const Matrix X = Matrix::NullaryExpr(n, n + 3, [&] { return n01(rng); });
      const GramianMatrix G = gram(X * X.transpose());
      const Index k = 1 + trial % n;
      const auto rho = principal_basis(G, k);
      CHECK((rho.basis.transpose() * rho.basis - Matrix::Identity(k, k)).norm() < 1e-10);
      for (Index j = 0; j < k; ++j) {
        Index first = 0;
        while (rho.basis(first, j) == 0.0) ++first;
        CHECK(rho.basis(first, j) > 0.0);
      }
      for (Index i = 1; i < n; ++i) CHECK(rho.eigenvalues[i - 1] >= rho.eigenvalues[i]);
      CHECK(principal_basis(G, k).basis == rho.basis);
    }
  }

  TEST_CASE("trace identity and optimality on sample data") {
    const auto ens = linear_ensemble();
    const GramianMatrix G = snapshot_summed_gramian(ens);
    const double total = G.matrix().trace();
    for (Index k = 1; k <= 3; ++k) {
      const auto rho = principal_basis(G, k);
      const double err = projection_error(ens, rho);
      const double captured = (rho.basis.transpose() * G.matrix() * rho.basis).trace();
      CHECK(std::abs(err + captured - total) <= 1e-9 * total);
      if (k == 3) CHECK(err <= 1e-10 * total);
    }
    std::mt19937_64 rng(8);
    const auto best = principal_basis(G, 1);
    const double best_err = projection_error(ens, best);
    for (int draw = 0; draw < 100; ++draw) CHECK(projection_error(ens, random_orthonormal(3, 1, rng)) >= best_err);
  }

  TEST_CASE("projection error checks the basis dimension") {
    const auto ens = linear_ensemble(10);
    CHECK_THROWS_AS(projection_error(ens, Matrix(Matrix::Identity(2, 2))), ConfigError);
  }

  TEST_CASE("directional reach scores obey the Rayleigh bounds") {
    const auto ens = linear_ensemble();
    const double tau = 2.0;
    const GramianMatrix G = empirical_gibbs_gramian(ens, tau);
    const auto rho = principal_basis(G, 3);
    const double l1 = rho.eigenvalues[0], ln = rho.eigenvalues[2];
    CHECK(directional_reach_score(ens, rho.basis.col(0), tau) == doctest::Approx(l1).epsilon(1e-10));
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    for (int draw = 0; draw < 500; ++draw) {
      Vector e = Vector::NullaryExpr(3, [&] { return n01(rng); });
      e.normalize();
      const double s = directional_reach_score(ens, e, tau);
      CHECK(s <= l1 + 1e-10);
      CHECK(s >= ln - 1e-10);
      CHECK(s == doctest::Approx(e.dot(G.matrix() * e)).epsilon(1e-10));
    }
    bool normalized = false;
    const double doubled = directional_reach_score(ens, 2 * rho.basis.col(0), tau, &normalized);
    CHECK(normalized);
    CHECK(doubled == doctest::Approx(l1).epsilon(1e-10));
  }

  TEST_CASE("second direction in two dimensions scores lambda_2") {
    const auto model = build_linear(oracle::mat({{-1, 0}, {0, -2}}), oracle::mat({{1}, {1}}), oracle::vec({0, 0}));
    const auto ens = simulate_ensemble(model, {0.5, 3, 2000}, SnapshotSchedule({2.0}, 1e-2));
    const auto rho = principal_basis(empirical_gibbs_gramian(ens, 2.0), 2);
    CHECK(directional_reach_score(ens, rho.basis.col(1), 2.0) == doctest::Approx(rho.eigenvalues[1]).epsilon(1e-10));
  }

  TEST_CASE("Galerkin projection of a linear system") {
    const Matrix A = oracle::mat({{-1, 0.3, 0}, {0, -2, 0.5}, {0.2, 0, -0.5}});
    const Matrix B = oracle::mat({{1}, {0.5}, {-1}});
    const auto model = build_linear(A, B, oracle::vec({1, 2, 3}));
    const auto rho = principal_basis(gram(oracle::mat({{4, 1, 0}, {1, 3, 0}, {0, 0, 1}})), 2);
    const auto reduced = galerkin_reduce(model, rho);
    REQUIRE(reduced.model.linear());
    CHECK(reduced.model.linear()->A == Matrix(rho.basis.transpose() * A * rho.basis));
    CHECK(reduced.model.linear()->B == Matrix(rho.basis.transpose() * B));
    CHECK(reduced.model.initial_state() == Vector(rho.basis.transpose() * oracle::vec({1, 2, 3})));
    CHECK(reduced.k() == 2);
  }

  TEST_CASE("identity basis reproduces the model") {
    const auto model = build_fhn(fhn_reference_coupling(), Matrix::Ones(4, 1), fhn_reference_initial_state());
    const auto rho = principal_basis(gram(Matrix::Identity(8, 8)), 8);
    const auto reduced = galerkin_reduce(model, rho);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01;
    for (int probe = 0; probe < 10; ++probe) {
      const Vector x = Vector::NullaryExpr(8, [&] { return n01(rng); });
      CHECK((reduced.model.drift(x) - model.drift(x)).norm() < 1e-12);
      CHECK((reduced.model.input_gain(x) - model.input_gain(x)).norm() < 1e-12);
    }
  }

  TEST_CASE("nonlinear reduced drift is the projected drift") {
    const auto model = build_expression_model({"x2", "-x1 - x1^3 + 0.1*x3", "-x3 + x1*x2"}, {{"0"}, {"1"}, {"x1"}},
                                              oracle::vec({0.5, 0, 0}));
    std::mt19937_64 rng(4);
    const Matrix P = random_orthonormal(3, 2, rng);
    ProjectionBasis rho;
    rho.basis = P;
    rho.eigenvalues = oracle::vec({2, 1, 0});
    const auto reduced = galerkin_reduce(model, rho);
    for (int probe = 0; probe < 5; ++probe) {
      std::normal_distribution<double> n01;
      const Vector z = Vector::NullaryExpr(2, [&] { return n01(rng); });
      const Vector x = P * z;
      CHECK((reduced.model.drift(z) - P.transpose() * model.drift(x)).norm() < 1e-12);
      CHECK((reduced.model.input_gain(z) - P.transpose() * model.input_gain(x)).norm() < 1e-12);
      CHECK((reduced.lift(z) - x).norm() == 0.0);
    }
  }
}
