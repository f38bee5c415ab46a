#pragma once

// Tuples (A0; A1..Am) of skew matrices driving rotation-type diffusions,
// and the coefficients they induce.

#include <utility>
#include <vector>

#include "polydiff/cspace.hpp"

namespace polydiff {

/// (A0; A1..Am): A0 is the drift direction, A1..Am the noise directions.
struct SkewDrive {
  int d = 1;
  SkewMatrix A0{1};
  std::vector<SkewMatrix> A;

  SkewDrive() = default;
  explicit SkewDrive(int d_) : d(d_), A0(d_) {}
  SkewDrive(SkewMatrix a0, std::vector<SkewMatrix> a) : d(a0.d()), A0(std::move(a0)), A(std::move(a)) {
    for (const auto& ap : A)
      if (ap.d() != d) throw ArgumentError("SkewDrive: all matrices must have the same dimension");
  }

  int m() const { return static_cast<int>(A.size()); }

  /// A0 = 0, A_p = D_p: Brownian motion on the sphere.
  static SkewDrive brownian(int d) {
    std::vector<SkewMatrix> a;
    for (int p = 1; p <= binomial(d, 2); ++p) a.push_back(elementary_skew(p, d));
    return SkewDrive(SkewMatrix(d), std::move(a));
  }

  /// sum_p A_p^T A_p.
  Matrix gram() const {
    Matrix g = Matrix::Zero(d, d);
    for (const auto& ap : A) {
      const Matrix a = ap.dense();
      g += a.transpose() * a;
    }
    return g;
  }
};

/// H = sum_p z_p z_p^T with z_p the coordinates of A_p, so c_H(x) = sum_p A_p x x^T A_p^T.
inline HMatrix h_from_drive(const SkewDrive& drive) {
  const auto m = binomial(drive.d, 2);
  Matrix h = Matrix::Zero(m, m);
  for (const auto& ap : drive.A) h += ap.coords() * ap.coords().transpose();
  return HMatrix(drive.d, h);
}

/// Linear drift of the full equation: B = Bhat + A0 - 1/2 sum_p A_p^T A_p.
inline Matrix drift_from_drive(const Matrix& bhat, const SkewDrive& drive) {
  return bhat + drive.A0.dense() - 0.5 * drive.gram();
}

}  // namespace polydiff
