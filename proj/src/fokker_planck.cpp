#include "gibbsgram/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gibbsgram/errors.hpp"

namespace gibbs {

std::size_t GridSpec::size() const {
  std::size_t total = 1;
  for (int p : points) total *= static_cast<std::size_t>(p);
  return total;
}

void GridSpec::validate() const {
  const Index d = dimension();
  if (d < 1 || d > 2) throw ConfigError("grid density solves support dimension 1 or 2");
  if (upper.size() != d || static_cast<Index>(points.size()) != d)
    throw ConfigError("grid bounds and point counts disagree in dimension");
  for (Index a = 0; a < d; ++a) {
    if (!(upper[a] > lower[a])) throw ConfigError("grid axis " + std::to_string(a + 1) + " is empty");
    if (points[static_cast<std::size_t>(a)] < 3)
      throw ConfigError("grid axis " + std::to_string(a + 1) + " needs at least 3 points");
  }
}

GridDensity::GridDensity(GridSpec grid, std::vector<double> values, double time)
    : grid_(std::move(grid)), values_(std::move(values)), time_(time) {
  grid_.validate();
  if (values_.size() != grid_.size()) throw ConfigError("grid density has the wrong number of values");
}

namespace {

double trapezoid_weight(int i, int n, double h) { return (i == 0 || i == n - 1) ? 0.5 * h : h; }

}  // namespace

double GridDensity::integral() const {
  const int n0 = grid_.points[0];
  const double h0 = grid_.spacing(0);
  double total = 0.0;
  if (grid_.dimension() == 1) {
    for (int i = 0; i < n0; ++i) total += trapezoid_weight(i, n0, h0) * (*this)(i);
    return total;
  }
  const int n1 = grid_.points[1];
  const double h1 = grid_.spacing(1);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      total += trapezoid_weight(i, n0, h0) * trapezoid_weight(j, n1, h1) * (*this)(i, j);
  return total;
}

Matrix GridDensity::second_moment() const {
  const Index d = grid_.dimension();
  Matrix m = Matrix::Zero(d, d);
  const int n0 = grid_.points[0];
  const double h0 = grid_.spacing(0);
  if (d == 1) {
    for (int i = 0; i < n0; ++i) {
      const double x = grid_.coordinate(0, i);
      m(0, 0) += trapezoid_weight(i, n0, h0) * (*this)(i)*x * x;
    }
    return m;
  }
  const int n1 = grid_.points[1];
  const double h1 = grid_.spacing(1);
  Vector x(2);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      x << grid_.coordinate(0, i), grid_.coordinate(1, j);
      m.noalias() += trapezoid_weight(i, n0, h0) * trapezoid_weight(j, n1, h1) * (*this)(i, j) *
                     (x * x.transpose());
    }
  return m;
}

double GridDensity::interpolate(const Eigen::Ref<const Vector>& x) const {
  const Index d = grid_.dimension();
  int base[2] = {0, 0};
  double frac[2] = {0.0, 0.0};
  for (Index a = 0; a < d; ++a) {
    const double s = (x[a] - grid_.lower[a]) / grid_.spacing(a);
    const int n = grid_.points[static_cast<std::size_t>(a)];
    if (s < 0.0 || s > n - 1) return 0.0;
    base[a] = std::min(static_cast<int>(std::floor(s)), n - 2);
    frac[a] = s - base[a];
  }
  if (d == 1) return (1.0 - frac[0]) * (*this)(base[0]) + frac[0] * (*this)(base[0] + 1);
  const int i = base[0], j = base[1];
  return (1.0 - frac[0]) * ((1.0 - frac[1]) * (*this)(i, j) + frac[1] * (*this)(i, j + 1)) +
         frac[0] * ((1.0 - frac[1]) * (*this)(i + 1, j) + frac[1] * (*this)(i + 1, j + 1));
}

double GridDensity::cell_mass(const Eigen::Ref<const Vector>& lo, const Eigen::Ref<const Vector>& hi,
                              int subdivisions) const {
  const Index d = grid_.dimension();
  Vector step = (hi - lo) / subdivisions;
  Vector x(d);
  double total = 0.0;
  if (d == 1) {
    for (int k = 0; k < subdivisions; ++k) {
      x[0] = lo[0] + (k + 0.5) * step[0];
      total += interpolate(x);
    }
    return total * step[0];
  }
  for (int k = 0; k < subdivisions; ++k)
    for (int l = 0; l < subdivisions; ++l) {
      x << lo[0] + (k + 0.5) * step[0], lo[1] + (l + 0.5) * step[1];
      total += interpolate(x);
    }
  return total * step[0] * step[1];
}

namespace {

double van_leer(double left, double right) {
  const double p = left * right;
  return p > 0.0 ? 2.0 * p / (left + right) : 0.0;
}

/// Explicit finite-volume operator for the Fokker-Planck right-hand side on a
/// grid with one or two axes; a 1-D grid is stored as N0 x 1.
class FokkerPlanckOperator {
 public:
  FokkerPlanckOperator(const DynamicsModel& model, double temperature, const GridSpec& grid)
      : d_(grid.dimension()),
        n0_(grid.points[0]),
        n1_(d_ == 2 ? grid.points[1] : 1),
        h0_(grid.spacing(0)),
        h1_(d_ == 2 ? grid.spacing(1) : 1.0) {
    const auto size = static_cast<std::size_t>(n0_) * static_cast<std::size_t>(n1_);
    d00_.resize(size);
    d11_.assign(size, 0.0);
    d01_.assign(size, 0.0);
    Vector x(d_), f(d_);
    Matrix g(d_, model.inputs());
    auto coord = [&](int i, int j, double di, double dj) {
      x[0] = grid.lower[0] + (i + di) * h0_;
      if (d_ == 2) x[1] = grid.lower[1] + (j + dj) * h1_;
    };
    for (int i = 0; i < n0_; ++i)
      for (int j = 0; j < n1_; ++j) {
        coord(i, j, 0.0, 0.0);
        model.input_gain(x, g);
        const Matrix D = 0.5 * temperature * g * g.transpose();
        const std::size_t k = at(i, j);
        d00_[k] = D(0, 0);
        if (d_ == 2) {
          d11_[k] = D(1, 1);
          d01_[k] = D(0, 1);
          mixed_ = mixed_ || D(0, 1) != 0.0;
        }
      }
    // face i of axis 0 sits between nodes i-1 and i
    vel0_.resize(static_cast<std::size_t>(n0_ + 1) * static_cast<std::size_t>(n1_));
    for (int i = 0; i <= n0_; ++i)
      for (int j = 0; j < n1_; ++j) {
        coord(i, j, -0.5, 0.0);
        model.drift(x, f);
        vel0_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n1_) + static_cast<std::size_t>(j)] = f[0];
      }
    if (d_ == 2) {
      vel1_.resize(static_cast<std::size_t>(n0_) * static_cast<std::size_t>(n1_ + 1));
      for (int i = 0; i < n0_; ++i)
        for (int j = 0; j <= n1_; ++j) {
          coord(i, j, 0.0, -0.5);
          model.drift(x, f);
          vel1_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n1_ + 1) + static_cast<std::size_t>(j)] = f[1];
        }
    }
    for (double v : vel0_)
      if (!std::isfinite(v)) throw NumericError("drift is not finite on the density grid");
    for (double v : vel1_)
      if (!std::isfinite(v)) throw NumericError("drift is not finite on the density grid");
  }

  /// Largest stable forward-Euler step for the combined scheme.
  double stable_step() const {
    double rate = 0.0;
    for (int i = 0; i < n0_; ++i)
      for (int j = 0; j < n1_; ++j) {
        const std::size_t k = at(i, j);
        const double a0 = std::max(std::abs(vel0_[face0(i, j)]), std::abs(vel0_[face0(i + 1, j)]));
        double r = 2.0 * a0 / h0_ + 2.0 * d00_[k] / (h0_ * h0_);
        if (d_ == 2) {
          const double a1 = std::max(std::abs(vel1_[face1(i, j)]), std::abs(vel1_[face1(i, j + 1)]));
          r += 2.0 * a1 / h1_ + 2.0 * d11_[k] / (h1_ * h1_) + 2.0 * std::abs(d01_[k]) / (h0_ * h1_);
        }
        rate = std::max(rate, r);
      }
    return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  }

  void apply(const std::vector<double>& rho, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    line_.resize(static_cast<std::size_t>(std::max(n0_, n1_) + 4));
    dline_.resize(line_.size());

    for (int j = 0; j < n1_; ++j) {
      load_line(rho, d00_, n0_, [&](int i) { return at(i, j); });
      sweep(n0_, h0_, [&](int i) { return vel0_[face0(i, j)]; },
            [&](int i, double v) { out[at(i, j)] += v; });
    }
    if (d_ == 2) {
      for (int i = 0; i < n0_; ++i) {
        load_line(rho, d11_, n1_, [&](int j) { return at(i, j); });
        sweep(n1_, h1_, [&](int j) { return vel1_[face1(i, j)]; },
              [&](int j, double v) { out[at(i, j)] += v; });
      }
      // mixed term 2 d0 d1 (D01 rho), central differences, zero ghosts
      auto q = [&](int i, int j) {
        if (i < 0 || i >= n0_ || j < 0 || j >= n1_) return 0.0;
        const std::size_t k = at(i, j);
        return d01_[k] * rho[k];
      };
      if (!mixed_) return;
      const double c = 2.0 / (4.0 * h0_ * h1_);
      for (int i = 0; i < n0_; ++i)
        for (int j = 0; j < n1_; ++j)
          out[at(i, j)] += c * (q(i + 1, j + 1) - q(i + 1, j - 1) - q(i - 1, j + 1) + q(i - 1, j - 1));
    }
  }

 private:
  std::size_t at(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n1_) + static_cast<std::size_t>(j);
  }
  std::size_t face0(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n1_) + static_cast<std::size_t>(j);
  }
  std::size_t face1(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n1_ + 1) + static_cast<std::size_t>(j);
  }

  /// Copies one grid line into line_ (rho) and dline_ (D rho) with two zero
  /// ghost cells on each side; line_[k + 2] holds node k.
  template <typename IndexFn>
  void load_line(const std::vector<double>& rho, const std::vector<double>& diff, int n,
                 IndexFn index) {
    line_[0] = line_[1] = dline_[0] = dline_[1] = 0.0;
    for (int k = 0; k < n; ++k) {
      const std::size_t s = index(k);
      line_[static_cast<std::size_t>(k + 2)] = rho[s];
      dline_[static_cast<std::size_t>(k + 2)] = diff[s] * rho[s];
    }
    line_[static_cast<std::size_t>(n + 2)] = line_[static_cast<std::size_t>(n + 3)] = 0.0;
    dline_[static_cast<std::size_t>(n + 2)] = dline_[static_cast<std::size_t>(n + 3)] = 0.0;
  }

  template <typename VelFn, typename AddFn>
  void sweep(int n, double h, VelFn velocity, AddFn add) {
    auto r = [&](int k) { return line_[static_cast<std::size_t>(k + 2)]; };
    auto slope = [&](int k) {
      if (k < -1 || k > n) return 0.0;
      return van_leer(r(k) - r(k - 1), r(k + 1) - r(k));
    };
    const double inv_h = 1.0 / h;
    for (int face = 0; face <= n; ++face) {
      const int left = face - 1, right = face;
      const double a = velocity(face);
      const double flux_adv =
          a > 0.0 ? a * (r(left) + 0.5 * slope(left)) : a * (r(right) - 0.5 * slope(right));
      const double flux_diff = -(dline_[static_cast<std::size_t>(right + 2)] -
                                 dline_[static_cast<std::size_t>(left + 2)]) * inv_h;
      const double flux = (flux_adv + flux_diff) * inv_h;
      if (left >= 0) add(left, -flux);
      if (right < n) add(right, flux);
    }
  }

  Index d_;
  int n0_, n1_;
  double h0_, h1_;
  std::vector<double> d00_, d11_, d01_;
  std::vector<double> vel0_, vel1_;
  std::vector<double> line_, dline_;
  bool mixed_ = false;
};

}  // namespace

GridDensity evolve_density(const DynamicsModel& model, double temperature,
                           const Eigen::Ref<const Vector>& x0, double tau, const GridSpec& grid,
                           const EvolveOptions& options) {
  grid.validate();
  const Index d = grid.dimension();
  if (model.dimension() != d)
    throw ConfigError("model dimension " + std::to_string(model.dimension()) +
                      " does not match the grid dimension " + std::to_string(d));
  if (!(temperature > 0.0)) throw ConfigError("density evolution requires temperature T > 0");
  if (!(tau > 0.0)) throw ConfigError("density evolution requires tau > 0");
  if (x0.size() != d) throw ConfigError("initial point has the wrong dimension");
  for (Index a = 0; a < d; ++a) {
    if (x0[a] <= grid.lower[a] || x0[a] >= grid.upper[a])
      throw ConfigError("initial point lies outside the grid box");
    if (std::sqrt(temperature * tau) < 5.0 * grid.spacing(a))
      throw ConfigError("grid axis " + std::to_string(a + 1) +
                        " does not resolve the diffusion length sqrt(T tau) with 5 cells");
  }

  const std::size_t size = grid.size();
  const int n1 = d == 2 ? grid.points[1] : 1;
  std::vector<double> rho(size);
  for (int i = 0; i < grid.points[0]; ++i)
    for (int j = 0; j < n1; ++j) {
      double e = 0.0;
      const double s0 = 2.0 * grid.spacing(0);
      const double z0 = (grid.coordinate(0, i) - x0[0]) / s0;
      e += z0 * z0;
      if (d == 2) {
        const double z1 = (grid.coordinate(1, j) - x0[1]) / (2.0 * grid.spacing(1));
        e += z1 * z1;
      }
      rho[static_cast<std::size_t>(i) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(j)] =
          std::exp(-0.5 * e);
    }
  GridDensity current(grid, rho, 0.0);
  const double initial_mass = current.integral();
  for (double& v : rho) v /= initial_mass;

  FokkerPlanckOperator op(model, temperature, grid);
  const double limit = options.cfl * op.stable_step();
  const auto steps = static_cast<std::size_t>(std::ceil(tau / limit));
  if (steps > options.max_steps)
    throw NumericError("density evolution needs " + std::to_string(steps) +
                       " explicit steps (cap " + std::to_string(options.max_steps) +
                       "); coarsen the grid or shorten tau");
  const double dt = tau / static_cast<double>(steps);

  std::vector<std::size_t> checkpoints;
  const int count = std::max(1, options.checkpoints);
  for (int c = 1; c <= count; ++c)
    checkpoints.push_back(steps * static_cast<std::size_t>(c) / static_cast<std::size_t>(count));

  std::vector<double> k1(size), stage(size), k2(size);
  std::vector<double> masses;
  auto next_checkpoint = checkpoints.begin();
  for (std::size_t step = 1; step <= steps; ++step) {
    op.apply(rho, k1);
    for (std::size_t k = 0; k < size; ++k) stage[k] = rho[k] + dt * k1[k];
    op.apply(stage, k2);
    for (std::size_t k = 0; k < size; ++k)
      rho[k] = 0.5 * rho[k] + 0.5 * (stage[k] + dt * k2[k]);

    while (next_checkpoint != checkpoints.end() && *next_checkpoint == step) {
      ++next_checkpoint;
      const double mass = GridDensity(grid, rho, 0.0).integral();
      masses.push_back(mass);
      if (!std::isfinite(mass)) throw NumericError("density evolution became non-finite");
      if (std::abs(1.0 - mass) > options.max_mass_drift)
        throw NumericError("domain too small: probability mass drifted to " + std::to_string(mass) +
                           " by t=" + std::to_string(static_cast<double>(step) * dt));
      for (double& v : rho) v /= mass;
    }
  }

  GridDensity out(grid, std::move(rho), tau);
  out.mass_history = std::move(masses);
  return out;
}

ControllabilityField stochastic_controllability_on_grid(const GridDensity& rho, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  const auto& values = rho.values();
  ControllabilityField field{rho.grid(), std::vector<double>(values.size()),
                             std::vector<double>(values.size())};
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < values.size(); ++k) {
    field.scaled[k] = values[k] > 0.0 ? -std::log(values[k]) : std::numeric_limits<double>::infinity();
    lowest = std::min(lowest, field.scaled[k]);
  }
  if (!std::isfinite(lowest)) throw NumericError("density is zero on the whole grid");
  for (std::size_t k = 0; k < values.size(); ++k) {
    field.scaled[k] -= lowest;
    field.cost[k] = temperature * field.scaled[k];
  }
  return field;
}

CrosscheckReport crosscheck_theorem(const DynamicsModel& model, double temperature,
                                    const Eigen::Ref<const Vector>& x0, double tau,
                                    const EnsembleSnapshots& ens, const GridSpec& grid,
                                    int bins_per_axis, const EvolveOptions& options) {
  if (!(temperature > 0.0))
    throw ConfigError("the density crosscheck requires T > 0; at T = 0 there is no Gibbs density");
  if (model.dimension() > 2) throw ConfigError("the density crosscheck supports dimension <= 2");
  if (ens.model_label() != model.label())
    throw ConfigError("ensemble was simulated for model '" + ens.model_label() + "', not '" +
                      model.label() + "'");
  if (ens.dimension() != model.dimension())
    throw ConfigError("ensemble dimension does not match the model");
  if (ens.noise().temperature != temperature)
    throw ConfigError("ensemble temperature " + std::to_string(ens.noise().temperature) +
                      " differs from the requested " + std::to_string(temperature));
  if (x0.size() != model.dimension() || x0 != model.initial_state())
    throw ConfigError("initial point differs from the model's initial state");
  if (bins_per_axis < 1) throw ConfigError("histogram needs at least one bin");

  const std::size_t index = ens.schedule().require_index(tau);
  const GridDensity density = evolve_density(model, temperature, x0, tau, grid, options);

  const Index d = grid.dimension();
  const auto bins = static_cast<std::size_t>(bins_per_axis);
  const std::size_t cells = d == 1 ? bins : bins * bins;
  std::vector<double> counts(cells, 0.0);
  double outside = 0.0;
  Vector width = (grid.upper - grid.lower) / bins_per_axis;
  for (std::size_t k = 0; k < ens.path_count(); ++k) {
    const auto x = ens.state(k, index);
    std::size_t cell = 0;
    bool in = true;
    for (Index a = 0; a < d; ++a) {
      const double s = (x[a] - grid.lower[a]) / width[a];
      if (!(s >= 0.0 && s < bins_per_axis)) {
        in = false;
        break;
      }
      cell = cell * bins + static_cast<std::size_t>(s);
    }
    if (in) {
      counts[cell] += 1.0;
    } else {
      outside += 1.0;
    }
  }
  const auto paths = static_cast<double>(ens.path_count());
  double l1 = outside / paths;
  Vector lo(d), hi(d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t rem = cell;
    for (Index a = d - 1; a >= 0; --a) {
      const auto b = static_cast<double>(rem % bins);
      rem /= bins;
      lo[a] = grid.lower[a] + b * width[a];
      hi[a] = lo[a] + width[a];
    }
    l1 += std::abs(counts[cell] / paths - density.cell_mass(lo, hi, d == 1 ? 64 : 8));
  }

  CrosscheckReport report;
  report.l1_distance = l1;
  report.monte_carlo_gramian = empirical_gibbs_gramian(ens, tau).matrix();
  report.grid_second_moment = density.second_moment();
  report.gramian_rel_error = (report.monte_carlo_gramian - report.grid_second_moment).norm() /
                             report.grid_second_moment.norm();
  report.grid = grid;
  report.bins_per_axis = bins_per_axis;
  report.paths = ens.path_count();
  report.dt = ens.schedule().dt();
  report.seed = ens.noise().seed;
  report.temperature = temperature;
  report.tau = ens.schedule().times()[index];
  return report;
}

}  // namespace gibbs
