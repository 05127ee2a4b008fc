#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library.

#include <cmath>
#include <functional>
#include <initializer_list>

#include <Eigen/Dense>

namespace oracle {

inline Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// Composite Simpson with `intervals` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Adaptive Simpson with Richardson correction.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 50) {
  const std::function<double(double, double, double, double, double, double, double, int)> step =
      [&](double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6 * (fa + 4 * flm + fm);
        const double right = (b - m) / 6 * (fm + 4 * frm + fb);
        const double delta = left + right - whole;
        if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
        return step(a, m, fa, flm, fm, left, tol / 2, depth - 1) + step(m, b, fm, frm, fb, right, tol / 2, depth - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return step(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, depth);
}

/// Second moment of e^{-x^4} / Z over the real line (tails beyond |x| = 6 are below 1e-500).
/// Integrated over unit pieces so the first Simpson estimate never sees only zeros.
inline double quartic_second_moment() {
  const auto w = [](double x) { return std::exp(-x * x * x * x); };
  double z = 0.0, m2 = 0.0;
  for (int a = -6; a < 6; ++a) {
    z += adaptive_simpson(w, a, a + 1, 1e-15);
    m2 += adaptive_simpson([&](double x) { return x * x * w(x); }, a, a + 1, 1e-15);
  }
  return m2 / z;
}

/// Stationary solution of A G + G A^T + B B^T = 0 for 2 x 2 A, solved as a
/// 3 x 3 linear system in (g11, g12, g22).
inline Eigen::Matrix2d lyapunov_2x2(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::Matrix2d Q = B * B.transpose();
  const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
  Eigen::Matrix3d M;
  // (AG + GA^T)_11 = 2a g11 + 2b g12
  // (AG + GA^T)_12 = c g11 + (a + d) g12 + b g22
  // (AG + GA^T)_22 = 2c g12 + 2d g22
  M << 2 * a, 2 * b, 0, c, a + d, b, 0, 2 * c, 2 * d;
  const Eigen::Vector3d rhs(-Q(0, 0), -Q(0, 1), -Q(1, 1));
  const Eigen::Vector3d g = M.fullPivLu().solve(rhs);
  Eigen::Matrix2d G;
  G << g[0], g[1], g[1], g[2];
  return G;
}

/// Normal density.
inline double gaussian(double x, double mean, double variance) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / variance) / std::sqrt(2 * M_PI * variance);
}

}  // namespace oracle
