#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "gibbsgram/errors.hpp"

namespace gibbs {

/// Matrix exponential by scaling and squaring with the [13/13] Pade
/// approximant (Higham 2005). The input is scaled by 2^-s so that its 1-norm
/// is at most theta_13 = 5.37, the approximant is evaluated with six matrix
/// products, and the result is squared s times.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_exponential(
    const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (input.rows() != input.cols()) throw ConfigError("matrix exponential needs a square matrix");
  if (!input.allFinite()) throw NumericError("matrix exponential of a non-finite matrix");

  constexpr Scalar b[] = {Scalar(64764752532480000.0), Scalar(32382376266240000.0),
                          Scalar(7771770303897600.0),  Scalar(1187353796428800.0),
                          Scalar(129060195264000.0),   Scalar(10559470521600.0),
                          Scalar(670442572800.0),      Scalar(33522128640.0),
                          Scalar(1323241920.0),        Scalar(40840800.0),
                          Scalar(960960.0),            Scalar(16380.0),
                          Scalar(182.0),               Scalar(1.0)};
  constexpr Scalar theta13 = Scalar(5.371920351148152);

  const Eigen::Index n = input.rows();
  Mat A = input;
  const Scalar norm = A.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    A /= std::ldexp(Scalar(1), squarings);
  }

  const Mat I = Mat::Identity(n, n);
  const Mat A2 = A * A;
  const Mat A4 = A2 * A2;
  const Mat A6 = A4 * A2;
  Mat inner = b[13] * A6 + b[11] * A4 + b[9] * A2;
  Mat U = A * (A6 * inner + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  inner = b[12] * A6 + b[10] * A4 + b[8] * A2;
  Mat V = A6 * inner + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

  Mat R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < squarings; ++k) R = R * R;
  return R;
}

}  // namespace gibbs
