#pragma once

// Lie-bracket closure of a skew drive and the smooth-density criteria for
// the sphere and ball diffusions it generates.
//
// g is spanned by A1..Am and iterated brackets [B, A_p], p = 0..m;
// h = g + span{A0}.

#include <cmath>
#include <string>
#include <vector>

#include "polydiff/drive.hpp"

namespace polydiff {

inline SkewMatrix bracket(const SkewMatrix& a, const SkewMatrix& b) {
  if (a.d() != b.d()) throw ArgumentError("bracket: dimension mismatch");
  const Matrix ad = a.dense(), bd = b.dense();
  return SkewMatrix::from_upper(ad * bd - bd * ad);
}

/// Subspace of Skew(d) with a basis orthonormal under <A,B> = tr(A^T B).
class LieSubspace {
 public:
  explicit LieSubspace(int d) : d_(d), q_(Matrix::Zero(binomial(d, 2), 0)) {}

  /// Span of the given matrices; rank by SVD with threshold tol * sigma_max.
  static LieSubspace span(int d, const std::vector<SkewMatrix>& gens, double tol = 1e-9) {
    LieSubspace s(d);
    const auto m = binomial(d, 2);
    if (gens.empty() || m == 0) return s;
    Matrix v(m, static_cast<Eigen::Index>(gens.size()));
    for (std::size_t k = 0; k < gens.size(); ++k) {
      if (gens[k].d() != d) throw ArgumentError("LieSubspace: dimension mismatch");
      v.col(static_cast<Eigen::Index>(k)) = std::sqrt(2.0) * gens[k].coords();
    }
    Eigen::JacobiSVD<Matrix> svd(v, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv(0) > 0.0)) return s;
    int r = 0;
    while (r < sv.size() && sv(r) > tol * sv(0)) ++r;
    s.q_ = svd.matrixU().leftCols(r);
    return s;
  }

  int d() const { return d_; }
  int dim() const { return static_cast<int>(q_.cols()); }

  std::vector<SkewMatrix> basis() const {
    std::vector<SkewMatrix> out;
    for (Eigen::Index k = 0; k < q_.cols(); ++k) out.push_back(SkewMatrix::from_coords(d_, q_.col(k) / std::sqrt(2.0)));
    return out;
  }

  /// Trace-norm distance from a to the subspace.
  double residual(const SkewMatrix& a) const {
    if (a.d() != d_) throw ArgumentError("LieSubspace: dimension mismatch");
    const Vector v = std::sqrt(2.0) * a.coords();
    return (v - q_ * (q_.transpose() * v)).norm();
  }

  bool contains(const SkewMatrix& a, double tol = 1e-9) const {
    return residual(a) <= tol * std::max(1.0, std::sqrt(2.0) * a.coords().norm());
  }

  /// { B x : B in the subspace } as an orthonormal basis of R^d.
  Matrix orbit_tangent(const Vector& x, double rel_tol = 1e-10) const {
    if (x.size() != d_) throw ArgumentError("LieSubspace: point dimension mismatch");
    Matrix bx(d_, dim());
    const auto b = basis();
    for (int k = 0; k < dim(); ++k) bx.col(k) = b[static_cast<std::size_t>(k)].dense() * x;
    if (dim() == 0) return Matrix::Zero(d_, 0);
    return column_space(bx, rel_tol);
  }

 private:
  int d_;
  Matrix q_;  // orthonormal columns in sqrt(2)-scaled upper-triangle coordinates
};

struct LieAlgebras {
  LieSubspace g{1};
  LieSubspace h{1};
  int layers = 0;           // bracket layers until the dimension stabilised
  double ideal_residual = 0.0;  // max distance of [B, A_p] from g over the g basis, p = 0..m
  bool ideal = true;
};

/// g and h of a drive. Generators are normalised first; the algebras
/// depend only on their directions.
inline LieAlgebras g_ideal(const SkewDrive& drive, double tol = 1e-9) {
  const int d = drive.d;
  auto unit = [](const SkewMatrix& a) {
    const double n = std::sqrt(inner(a, a));
    return n > 0.0 ? (1.0 / n) * a : a;
  };
  std::vector<SkewMatrix> gens;  // A0, A1..Am, normalised
  gens.push_back(unit(drive.A0));
  for (const auto& ap : drive.A) gens.push_back(unit(ap));

  LieAlgebras out;
  std::vector<SkewMatrix> layer(gens.begin() + 1, gens.end());
  out.g = LieSubspace::span(d, layer, tol);
  const int cap = static_cast<int>(binomial(d, 2));
  while (out.g.dim() > 0 && out.layers <= cap) {
    std::vector<SkewMatrix> next = out.g.basis();
    for (const auto& b : out.g.basis())
      for (const auto& ap : gens) next.push_back(bracket(b, ap));
    LieSubspace grown = LieSubspace::span(d, next, tol);
    ++out.layers;
    const bool stable = grown.dim() == out.g.dim();
    out.g = std::move(grown);
    if (stable) break;
  }
  std::vector<SkewMatrix> hs = out.g.basis();
  hs.push_back(gens.front());
  out.h = LieSubspace::span(d, hs, tol);

  for (const auto& b : out.g.basis())
    for (const auto& ap : gens) out.ideal_residual = std::max(out.ideal_residual, out.g.residual(bracket(b, ap)));
  out.ideal = out.ideal_residual <= std::max(tol, 1e-12);
  return out;
}

struct SphereDensityReport {
  bool has_smooth_density = false;
  int dim_g = 0;
  int dim_h = 0;
  bool a0x0_in_gx0 = false;
  double membership_residual = 0.0;
  bool g_is_full = false;  // g = Skew(d)
  int orbit_dim = 0;       // dim h x0, the dimension of the reference manifold
};

/// Smooth density on the orbit H x0 exists iff A0 x0 lies in g x0.
inline SphereDensityReport density_check_sphere(const SkewDrive& drive, const Vector& x0, double tol = 1e-9) {
  if (x0.size() != drive.d) throw ArgumentError("density_check_sphere: x0 dimension mismatch");
  if (std::abs(x0.norm() - 1.0) > 1e-10) throw ArgumentError("density_check_sphere: x0 must be a unit vector");
  const LieAlgebras alg = g_ideal(drive, tol);
  SphereDensityReport r;
  r.dim_g = alg.g.dim();
  r.dim_h = alg.h.dim();
  r.g_is_full = r.dim_g == binomial(drive.d, 2);
  const Vector a0x0 = drive.A0.dense() * x0;
  const Matrix gx0 = alg.g.orbit_tangent(x0);
  r.membership_residual = (a0x0 - gx0 * (gx0.transpose() * a0x0)).norm();
  r.a0x0_in_gx0 = r.membership_residual <= std::max(tol * a0x0.norm(), 1e-12);
  r.has_smooth_density = r.a0x0_in_gx0;
  r.orbit_dim = static_cast<int>(alg.h.orbit_tangent(x0).cols());
  return r;
}

struct BallDensityReport {
  bool has_smooth_density = false;
  int dim_g_lifted = 0;
  int target_dim = 0;  // dim Skew(d + 1)
  int alpha_rank = 0;
};

/// The lifted drive in Skew(d + 1): A_p in the top-left block, and
/// [[0, a_i], [-a_i^T, 0]] for alpha = sum_i a_i a_i^T.
inline SkewDrive lift_drive(const SkewDrive& drive, const Matrix& alpha) {
  const int d = drive.d;
  if (alpha.rows() != d || alpha.cols() != d) throw ArgumentError("lift_drive: alpha must be d x d");
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym_part(alpha));
  if (d > 0 && es.eigenvalues()(0) < -1e-12) throw ArgumentError("lift_drive: alpha must be positive semidefinite");
  auto embed = [d](const SkewMatrix& a) {
    Matrix big = Matrix::Zero(d + 1, d + 1);
    big.topLeftCorner(d, d) = a.dense();
    return SkewMatrix::from_upper(big);
  };
  std::vector<SkewMatrix> lifted;
  for (const auto& ap : drive.A) lifted.push_back(embed(ap));
  for (int i = 0; i < d; ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam < 1e-12) continue;
    Matrix big = Matrix::Zero(d + 1, d + 1);
    big.col(d).head(d) = std::sqrt(lam) * es.eigenvectors().col(i);
    big.row(d).head(d) = -big.col(d).head(d).transpose();
    lifted.push_back(SkewMatrix::from_upper(big));
  }
  return SkewDrive(embed(drive.A0), std::move(lifted));
}

/// Smooth density on the open ball for the model with Bhat = -alpha / 2,
/// whenever the lifted drive generates Skew(d + 1). The criterion does not
/// depend on the starting point beyond x0 lying in the closed ball.
inline BallDensityReport density_check_ball(const SkewDrive& drive, const Matrix& alpha, const Vector& x0,
                                            double tol = 1e-9) {
  if (x0.size() != drive.d) throw ArgumentError("density_check_ball: x0 dimension mismatch");
  if (x0.norm() > 1.0 + 1e-10) throw ArgumentError("density_check_ball: x0 must lie in the closed unit ball");
  const SkewDrive lifted = lift_drive(drive, alpha);
  BallDensityReport r;
  r.alpha_rank = lifted.m() - drive.m();
  r.dim_g_lifted = g_ideal(lifted, tol).g.dim();
  r.target_dim = static_cast<int>(binomial(drive.d + 1, 2));
  r.has_smooth_density = r.dim_g_lifted == r.target_dim;
  return r;
}

}  // namespace polydiff
