#include "gibbsgram/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "gibbsgram/errors.hpp"
#include "gibbsgram/expression.hpp"

namespace gibbs {

DivergenceError::DivergenceError(std::size_t path, double time, Eigen::VectorXd last_finite_state)
    : NumericError([&] {
        std::ostringstream os;
        os << "path " << path << " diverged at t=" << time << "; last finite state ["
           << last_finite_state.transpose() << "]";
        return os.str();
      }()),
      path_(path),
      time_(time),
      last_state_(std::move(last_finite_state)) {}

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

DynamicsModel::DynamicsModel(std::string label, Index dimension, Index inputs, DriftFn drift,
                             GainFn gain, Vector initial_state) {
  if (dimension < 1) throw ConfigError("model dimension must be positive");
  if (inputs < 1) throw ConfigError("model must have at least one input");
  if (initial_state.size() != dimension)
    throw ConfigError("initial state has length " + std::to_string(initial_state.size()) +
                      ", expected " + std::to_string(dimension));
  auto impl = std::make_shared<Impl>();
  impl->label = std::move(label);
  impl->dimension = dimension;
  impl->inputs = inputs;
  impl->drift = std::move(drift);
  impl->gain = std::move(gain);
  impl->initial_state = std::move(initial_state);
  impl_ = std::move(impl);
}

DynamicsModel::DynamicsModel(std::string label, DriftFn drift, Matrix gain, Vector initial_state) {
  if (gain.rows() != initial_state.size())
    throw ConfigError("input gain is " + shape(gain) + " but the state has length " +
                      std::to_string(initial_state.size()));
  if (gain.rows() < 1 || gain.cols() < 1) throw ConfigError("input gain must be non-empty");
  auto impl = std::make_shared<Impl>();
  impl->label = std::move(label);
  impl->dimension = gain.rows();
  impl->inputs = gain.cols();
  impl->drift = std::move(drift);
  impl->gain = [g = gain](const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out = g; };
  impl->constant_gain = std::move(gain);
  impl->initial_state = std::move(initial_state);
  impl_ = std::move(impl);
}

void DynamicsModel::drift(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  impl_->drift(x, out);
}

Vector DynamicsModel::drift(const Eigen::Ref<const Vector>& x) const {
  Vector out(dimension());
  impl_->drift(x, out);
  return out;
}

void DynamicsModel::input_gain(const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const {
  impl_->gain(x, out);
}

Matrix DynamicsModel::input_gain(const Eigen::Ref<const Vector>& x) const {
  Matrix out(dimension(), inputs());
  impl_->gain(x, out);
  return out;
}

DynamicsModel DynamicsModel::with_initial_state(Vector x0) const {
  if (x0.size() != dimension())
    throw ConfigError("initial state has length " + std::to_string(x0.size()) + ", expected " +
                      std::to_string(dimension()));
  auto impl = std::make_shared<Impl>(*impl_);
  impl->initial_state = std::move(x0);
  return DynamicsModel(std::move(impl));
}

DynamicsModel DynamicsModel::with_label(std::string label) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->label = std::move(label);
  return DynamicsModel(std::move(impl));
}

void DynamicsModel::smoke_check(double radius, int points_per_axis) const {
  const Index n = dimension();
  // Probe along each axis through the initial state; a full tensor grid would
  // be exponential in n.
  Vector f(n);
  Matrix g(n, inputs());
  for (Index axis = 0; axis < n; ++axis) {
    for (int k = 0; k < points_per_axis; ++k) {
      Vector x = initial_state();
      if (points_per_axis > 1) x[axis] += radius * (2.0 * k / (points_per_axis - 1) - 1.0);
      drift(x, f);
      input_gain(x, g);
      if (!f.allFinite() || !g.allFinite()) {
        std::ostringstream os;
        os << "model '" << label() << "' is not finite at probe point [" << x.transpose() << "]";
        throw NumericError(os.str());
      }
    }
  }
}

DynamicsModel build_linear(const Matrix& A, const Matrix& B, const Vector& x0, std::string label) {
  if (A.rows() != A.cols()) throw ConfigError("matrix A must be square, got " + shape(A));
  if (B.rows() != A.rows())
    throw ConfigError("matrix B is " + shape(B) + " but A is " + shape(A) +
                      "; B needs one row per state");
  if (B.cols() < 1) throw ConfigError("matrix B must have at least one column");
  if (x0.size() != A.rows())
    throw ConfigError("initial state x0 has length " + std::to_string(x0.size()) +
                      ", expected " + std::to_string(A.rows()));

  DynamicsModel model(
      std::move(label),
      [A](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out.noalias() = A * x; },
      B, x0);
  auto impl = std::make_shared<DynamicsModel::Impl>(*model.impl_);
  impl->linear = LinearSystem{A, B};
  return DynamicsModel(std::move(impl));
}

DynamicsModel build_fhn(const Matrix& coupling, const Matrix& input_pattern, const Vector& x0,
                        std::string label) {
  const Index p = coupling.rows();
  if (p < 1 || coupling.cols() != p)
    throw ConfigError("coupling matrix must be square and non-empty, got " + shape(coupling));
  for (Index i = 0; i < p; ++i) {
    if (coupling(i, i) != 0.0)
      throw ConfigError("coupling matrix must have zero diagonal (entry " + std::to_string(i + 1) +
                        "," + std::to_string(i + 1) + ")");
    for (Index j = 0; j < p; ++j) {
      if (coupling(i, j) != coupling(j, i))
        throw ConfigError("coupling matrix must be symmetric (entries " + std::to_string(i + 1) +
                          "," + std::to_string(j + 1) + ")");
      if (coupling(i, j) < 0.0 || !std::isfinite(coupling(i, j)))
        throw ConfigError("coupling strengths must be nonnegative (entry " +
                          std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
    }
  }
  if (input_pattern.rows() != p || input_pattern.cols() < 1)
    throw ConfigError("input pattern is " + shape(input_pattern) + ", expected " +
                      std::to_string(p) + " rows (one per neuron)");
  if (x0.size() != 2 * p)
    throw ConfigError("initial state has length " + std::to_string(x0.size()) + ", expected " +
                      std::to_string(2 * p));

  Matrix gain = Matrix::Zero(2 * p, input_pattern.cols());
  for (Index i = 0; i < p; ++i) gain.row(2 * i) = input_pattern.row(i);

  auto drift = [c = coupling, p](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
    for (Index i = 0; i < p; ++i) {
      const double v = x[2 * i];
      const double w = x[2 * i + 1];
      double interaction = 0.0;
      for (Index j = 0; j < p; ++j) interaction += c(i, j) * (x[2 * j] - v);
      out[2 * i] = v - v * v * v / 3.0 - w + interaction;
      out[2 * i + 1] = 0.08 * (v - 0.8 * w);
    }
  };

  DynamicsModel model(std::move(label), drift, std::move(gain), x0);
  auto impl = std::make_shared<DynamicsModel::Impl>(*model.impl_);
  impl->fhn = FhnNetwork{coupling, input_pattern};
  return DynamicsModel(std::move(impl));
}

DynamicsModel build_expression_model(const std::vector<std::string>& drift,
                                     const std::vector<std::vector<std::string>>& gain,
                                     const Vector& x0, std::string label) {
  const Index n = static_cast<Index>(drift.size());
  if (n < 1) throw ConfigError("expression model needs at least one drift component");
  if (x0.size() != n)
    throw ConfigError("initial state has length " + std::to_string(x0.size()) + ", expected " +
                      std::to_string(n));
  if (static_cast<Index>(gain.size()) != n)
    throw ConfigError("input gain needs " + std::to_string(n) + " rows, got " +
                      std::to_string(gain.size()));
  const Index m = gain.empty() ? 0 : static_cast<Index>(gain.front().size());
  if (m < 1) throw ConfigError("input gain needs at least one column");

  std::vector<Expression> f;
  for (const auto& s : drift) f.push_back(Expression::parse(s, n));
  std::vector<Expression> g;
  for (const auto& row : gain) {
    if (static_cast<Index>(row.size()) != m)
      throw ConfigError("input gain rows must all have " + std::to_string(m) + " entries");
    for (const auto& s : row) g.push_back(Expression::parse(s, n));
  }

  auto drift_fn = [f](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
    for (std::size_t i = 0; i < f.size(); ++i) out[static_cast<Index>(i)] = f[i].evaluate(x);
  };

  // Gains without state symbols are folded into a constant matrix so the
  // engine can skip per-step gain evaluation.
  bool constant = true;
  Matrix g0(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) {
      const auto& e = g[static_cast<std::size_t>(i * m + j)];
      if (e.source().find('x') != std::string::npos) constant = false;
      g0(i, j) = e.evaluate(x0);
    }
  if (constant) return DynamicsModel(std::move(label), drift_fn, std::move(g0), x0);

  auto gain_fn = [g, m](const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) {
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < m; ++j) out(i, j) = g[static_cast<std::size_t>(i * m + j)].evaluate(x);
  };
  return DynamicsModel(std::move(label), n, m, drift_fn, gain_fn, x0);
}

Matrix drift_jacobian(const DynamicsModel& model, const Eigen::Ref<const Vector>& x, double h) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  const Index n = model.dimension();
  if (x.size() != n) throw ConfigError("probe point has the wrong dimension");
  Matrix J(n, n);
  Vector plus(n), minus(n), probe = x;
  model.drift(probe, plus);
  if (!plus.allFinite()) {
    std::ostringstream os;
    os << "drift is not finite at probe point [" << x.transpose() << "]";
    throw NumericError(os.str());
  }
  for (Index j = 0; j < n; ++j) {
    probe[j] = x[j] + h;
    model.drift(probe, plus);
    probe[j] = x[j] - h;
    model.drift(probe, minus);
    probe[j] = x[j];
    if (!plus.allFinite() || !minus.allFinite()) {
      std::ostringstream os;
      os << "drift is not finite near probe point [" << x.transpose() << "] along axis "
         << j + 1;
      throw NumericError(os.str());
    }
    J.col(j) = (plus - minus) / (2.0 * h);
  }
  return J;
}

Matrix fhn_reference_coupling() {
  Matrix c = Matrix::Zero(4, 4);
  c(0, 1) = c(1, 0) = 0.1;
  c(2, 3) = c(3, 2) = 0.1;
  c(1, 2) = c(2, 1) = 0.005;
  return c;
}

Vector fhn_reference_initial_state() {
  Vector x0(8);
  x0 << -1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, -2.0;
  return x0;
}

}  // namespace gibbs
