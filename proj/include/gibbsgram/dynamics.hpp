#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gibbsgram/types.hpp"

namespace gibbs {

/// Constant-coefficient system dx/dt = A x + B u.
struct LinearSystem {
  Matrix A;
  Matrix B;
};

/// Diffusively coupled FitzHugh-Nagumo neurons.
///
/// State layout is interleaved: [v1, w1, v2, w2, ..., vp, wp]. Neuron i obeys
///
///   dv_i/dt = v_i - v_i^3/3 - w_i + sum_{j != i} coupling(i,j) (v_j - v_i) + (P u)_i
///   dw_i/dt = 0.08 (v_i - 0.8 w_i)
///
/// where P is the p x m input pattern acting on the v-equations only.
struct FhnNetwork {
  Matrix coupling;
  Matrix input_pattern;

  Index neurons() const { return coupling.rows(); }
};

/// Drift f and input gain g of dx/dt = f(x) + g(x) u, together with the
/// initial state. Immutable after construction; evaluation is reentrant.
class DynamicsModel {
 public:
  using DriftFn = std::function<void(const Eigen::Ref<const Vector>&, Eigen::Ref<Vector>)>;
  using GainFn = std::function<void(const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix>)>;

  /// A state-dependent model. `gain` must write an n x m matrix.
  DynamicsModel(std::string label, Index dimension, Index inputs, DriftFn drift, GainFn gain,
                Vector initial_state);

  /// A model whose input gain is the constant matrix `gain`.
  DynamicsModel(std::string label, DriftFn drift, Matrix gain, Vector initial_state);

  Index dimension() const { return impl_->dimension; }
  Index inputs() const { return impl_->inputs; }
  const Vector& initial_state() const { return impl_->initial_state; }
  const std::string& label() const { return impl_->label; }

  void drift(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const;
  Vector drift(const Eigen::Ref<const Vector>& x) const;

  void input_gain(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const;
  Matrix input_gain(const Eigen::Ref<const Vector>& x) const;

  /// Present when the gain does not depend on the state.
  const std::optional<Matrix>& constant_gain() const { return impl_->constant_gain; }

  /// Family metadata, present for models built by build_linear / build_fhn.
  const std::optional<LinearSystem>& linear() const { return impl_->linear; }
  const std::optional<FhnNetwork>& fhn() const { return impl_->fhn; }

  DynamicsModel with_initial_state(Vector x0) const;
  DynamicsModel with_label(std::string label) const;

  /// Evaluates drift and gain on a probe grid around the initial state and
  /// throws NumericError on non-finite output or ConfigError on a gain of the
  /// wrong shape.
  void smoke_check(double radius = 2.0, int points_per_axis = 3) const;

 private:
  struct Impl {
    std::string label;
    Index dimension = 0;
    Index inputs = 0;
    DriftFn drift;
    GainFn gain;
    std::optional<Matrix> constant_gain;
    Vector initial_state;
    std::optional<LinearSystem> linear;
    std::optional<FhnNetwork> fhn;
  };

  explicit DynamicsModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<const Impl> impl_;

  friend DynamicsModel build_linear(const Matrix&, const Matrix&, const Vector&, std::string);
  friend DynamicsModel build_fhn(const Matrix&, const Matrix&, const Vector&, std::string);
};

DynamicsModel build_linear(const Matrix& A, const Matrix& B, const Vector& x0,
                           std::string label = "linear");

/// `coupling` is the symmetric, nonnegative, zero-diagonal p x p matrix and
/// `input_pattern` maps the m inputs onto the p v-equations.
DynamicsModel build_fhn(const Matrix& coupling, const Matrix& input_pattern, const Vector& x0,
                        std::string label = "fhn");

/// Drift and gain given as arithmetic expressions over x1..xn.
/// `gain` holds n rows of m expressions each.
DynamicsModel build_expression_model(const std::vector<std::string>& drift,
                                     const std::vector<std::vector<std::string>>& gain,
                                     const Vector& x0, std::string label = "expression");

/// Central finite-difference Jacobian of the drift.
Matrix drift_jacobian(const DynamicsModel& model, const Eigen::Ref<const Vector>& x, double h);

/// Coupling matrix of the four-neuron network: 1-2 and 3-4 strongly coupled,
/// 2-3 weakly coupled.
Matrix fhn_reference_coupling();
/// Initial state v1 = -v3 = (-1, 0), v2 = -v4 = (0, 2).
Vector fhn_reference_initial_state();

}  // namespace gibbs
