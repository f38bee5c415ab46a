#pragma once

// The d = 6 element of C_+ whose biquadratic form is nonnegative but not a
// sum of squares, together with the explicit separating certificate.

#include <cmath>

#include "polydiff/cspace.hpp"

namespace polydiff {

/// 15 x 15 matrix H (half of an integer matrix).
inline HMatrix counterexample_d6_h() {
  static constexpr int kTwiceH[15][15] = {
      {2, 0, 0, 0, 0, 0, 0, 0, -2, -1, 0, 0, 0, 0, 0},
      {0, 2, 0, 0, 0, 0, -1, 0, 0, 0, -2, 0, 0, 0, 0},
      {0, 0, 4, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {0, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
      {0, 0, -1, 0, 0, 4, 0, 0, 0, 0, 0, 0, -1, 0, 0},
      {0, -1, 0, 0, 0, 0, 2, 0, 0, 0, -1, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 0, 4, 0, -1, 0, 0, 0, 0, 0},
      {-2, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0},
      {-1, 0, 0, 0, 0, 0, 0, -1, 0, 4, 0, 0, 0, 0, 0},
      {0, -2, 0, 0, 0, 0, -1, 0, 0, 0, 2, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 4, 0, 0, 0},
      {0, 0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 2, 2, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 2, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 4}};
  Matrix h(15, 15);
  for (int p = 0; p < 15; ++p)
    for (int q = 0; q < 15; ++q) h(p, q) = 0.5 * kTwiceH[p][q];
  return HMatrix(6, h);
}

/// phi(s) = 4 s^3 - 16 s^2 + 14 s + 1.
inline double counterexample_phi(double s) { return ((4.0 * s - 16.0) * s + 14.0) * s + 1.0; }

/// The unique negative root of phi, by bisection on (-1, 0) where
/// phi(-1) < 0 < phi(0).
inline double counterexample_mu(double tol = 1e-14) {
  double lo = -1.0, hi = 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (counterexample_phi(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// lambda = (1 - sqrt 3) / 2, the negative root of 2 s^2 - 2 s - 1.
inline double counterexample_lambda() { return 0.5 * (1.0 - std::sqrt(3.0)); }

struct CounterexampleCertificate {
  double lambda = 0.0;
  double mu = 0.0;
  double delta = 0.0;
  Vector v1, v2, v3;
  Matrix b;
};

inline CounterexampleCertificate counterexample_d6_certificate() {
  CounterexampleCertificate c;
  c.lambda = counterexample_lambda();
  c.mu = counterexample_mu();
  const double l = c.lambda, mu = c.mu;
  c.delta = mu * (mu - 2.0) * (2.0 * mu - 1.0) / l;
  // 1-based e_i in R^15
  auto e = [](int i) { return Vector(Vector::Unit(15, i - 1)); };
  c.v1 = 0.5 * e(2) - l * e(7) + 0.5 * e(11);
  c.v2 = 0.5 * mu * e(3) + mu * (2.0 - mu) * e(6) + 0.5 * (mu - 1.0) * e(13) + 0.5 * e(14);
  c.v3 = 0.5 * (1.0 - mu) * e(1) - 0.5 * mu * e(8) + 0.5 * e(9) + mu * (mu - 2.0) * e(10);
  c.b = c.delta * c.v1 * c.v1.transpose() + c.v2 * c.v2.transpose() + c.v3 * c.v3.transpose();
  return c;
}

}  // namespace polydiff
