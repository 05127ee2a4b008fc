#pragma once

#include <vector>

#include "gibbsgram/dynamics.hpp"
#include "gibbsgram/gramian.hpp"
#include "gibbsgram/sde.hpp"

namespace gibbs {

/// Node-centred rectangular grid in one or two dimensions.
struct GridSpec {
  Vector lower;
  Vector upper;
  std::vector<int> points;

  Index dimension() const { return lower.size(); }
  double spacing(Index axis) const {
    return (upper[axis] - lower[axis]) / (points[static_cast<std::size_t>(axis)] - 1);
  }
  double coordinate(Index axis, int i) const { return lower[axis] + i * spacing(axis); }
  std::size_t size() const;
  void validate() const;
};

/// Nonnegative density values on a GridSpec, axis 0 slowest.
class GridDensity {
 public:
  GridDensity(GridSpec grid, std::vector<double> values, double time);

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double time() const { return time_; }

  double operator()(int i) const { return values_[static_cast<std::size_t>(i)]; }
  double operator()(int i, int j) const {
    return values_[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_.points[1]) +
                   static_cast<std::size_t>(j)];
  }

  /// Trapezoid-rule integral.
  double integral() const;
  /// Trapezoid-rule second moment about the origin.
  Matrix second_moment() const;
  /// Piecewise (bi)linear interpolation; zero outside the grid.
  double interpolate(const Eigen::Ref<const Vector>& x) const;
  /// Integral of the interpolant over the axis-aligned cell [lo, hi].
  double cell_mass(const Eigen::Ref<const Vector>& lo, const Eigen::Ref<const Vector>& hi,
                   int subdivisions = 32) const;

  /// Integral before each renormalization, one entry per checkpoint.
  std::vector<double> mass_history;

 private:
  GridSpec grid_;
  std::vector<double> values_;
  double time_;
};

struct EvolveOptions {
  /// Number of evenly spaced checkpoints at which the mass is checked and
  /// renormalized (the final time is always a checkpoint).
  int checkpoints = 10;
  /// Fraction of the explicit stability limit used for the time step.
  double cfl = 0.9;
  /// Refuse to run more time steps than this.
  std::size_t max_steps = 50'000'000;
  /// Largest tolerated |1 - mass| at a checkpoint.
  double max_mass_drift = 1e-3;
};

/// Forward Kolmogorov (Fokker-Planck) solve for the density of the noise
/// response dx = f dt + g sqrt(T) dW started near x0:
///
///   d rho/dt = -div(f rho) + sum_ij d_i d_j (D_ij rho),  D = (T/2) g g^T.
///
/// Advection is a limited (van Leer) upwind finite-volume scheme, diffusion
/// uses central differences, and time stepping is the two-stage SSP
/// Runge-Kutta method under the combined explicit stability limit. Outflow
/// boundaries; the initial delta is a Gaussian two cells wide.
GridDensity evolve_density(const DynamicsModel& model, double temperature,
                           const Eigen::Ref<const Vector>& x0, double tau, const GridSpec& grid,
                           const EvolveOptions& options = {});

/// L^tau / T = -ln rho + c on the grid, c chosen so the minimum is zero.
/// Cells with zero density carry +inf and are excluded from the constant.
struct ControllabilityField {
  GridSpec grid;
  std::vector<double> scaled;  // L^tau / T
  std::vector<double> cost;    // L^tau
};

ControllabilityField stochastic_controllability_on_grid(const GridDensity& rho, double temperature);

struct CrosscheckReport {
  double l1_distance = 0.0;
  double gramian_rel_error = 0.0;
  Matrix monte_carlo_gramian;
  Matrix grid_second_moment;
  GridSpec grid;
  int bins_per_axis = 0;
  std::size_t paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double temperature = 0.0;
  double tau = 0.0;
};

/// Compares the Monte-Carlo ensemble at tau against a grid solve: L1 distance
/// between bin probabilities of the sample histogram and of the grid density
/// (mass outside the box counts fully), and the relative Frobenius error
/// between the empirical Gramian and the grid second moment.
CrosscheckReport crosscheck_theorem(const DynamicsModel& model, double temperature,
                                    const Eigen::Ref<const Vector>& x0, double tau,
                                    const EnsembleSnapshots& ens, const GridSpec& grid,
                                    int bins_per_axis = 40, const EvolveOptions& options = {});

}  // namespace gibbs
