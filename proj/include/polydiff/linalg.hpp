#pragma once

// Dense linear-algebra helpers shared by every module: type aliases, trace
// inner products, symmetric eigen helpers, numerical rank, and a Pade
// scaling-and-squaring matrix exponential.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "polydiff/errors.hpp"

namespace polydiff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Small dense matrix with inline storage; used on hot simulation paths.
inline constexpr int kMaxSmallDim = 9;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                                  kMaxSmallDim, kMaxSmallDim>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSmallDim, 1>;

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Trace inner product <A,B> = tr(A^T B).
template <typename A, typename B>
double inner(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.cwiseProduct(b).sum();
}

inline Matrix sym_part(const Matrix& a) { return 0.5 * (a + a.transpose()); }
inline Matrix skew_part(const Matrix& a) { return 0.5 * (a - a.transpose()); }

inline double min_eigenvalue(const Matrix& s) {
  if (s.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& s) {
  if (s.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(s.rows() - 1);
}

/// Symmetric PSD square root; negative eigenvalues are clipped to zero.
inline Matrix psd_sqrt(const Matrix& s) {
  if (s.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline std::vector<double> singular_values(const Matrix& a) {
  if (a.size() == 0) return {};
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

/// Numerical rank: number of singular values above rel_tol * sigma_max.
inline int numerical_rank(const Matrix& a, double rel_tol = 1e-10) {
  auto s = singular_values(a);
  if (s.empty() || s.front() == 0.0) return 0;
  const double cut = rel_tol * s.front();
  return static_cast<int>(std::count_if(s.begin(), s.end(),
                                        [cut](double v) { return v > cut; }));
}

/// Orthonormal basis (as columns) of the column space of `a`.
inline Matrix column_space(const Matrix& a, double rel_tol = 1e-10) {
  if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  int r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    while (r < s.size() && s(r) > rel_tol * s(0)) ++r;
  }
  return svd.matrixU().leftCols(r);
}

namespace detail {

// Pade coefficients b_0..b_m and one-norm thresholds for double precision
// (Higham, SIAM J. Matrix Anal. Appl. 26(4), 2005).
inline constexpr std::array<double, 4> kPade3 = {120., 60., 12., 1.};
inline constexpr std::array<double, 6> kPade5 = {30240., 15120., 3360., 420., 30., 1.};
inline constexpr std::array<double, 8> kPade7 = {17297280., 8648640., 1995840., 277200.,
                                                 25200.,    1512.,    56.,      1.};
inline constexpr std::array<double, 10> kPade9 = {
    17643225600., 8821612800., 2075673600., 302702400., 30270240.,
    2162160.,     110880.,     3960.,       90.,        1.};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
    129060195264000.,   10559470521600.,    670442572800.,     33522128640.,
    1323241920.,        40840800.,          960960.,           16380.,
    182.,               1.};
inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

template <typename M, std::size_t N>
void pade_uv(const M& a, const std::array<double, N>& b, M& u, M& v) {
  const auto n = a.rows();
  const M id = M::Identity(n, n);
  const M a2 = a * a;
  M odd = b[1] * id + b[3] * a2;
  M even = b[0] * id + b[2] * a2;
  M pw = a2;
  for (std::size_t k = 4; k < N; k += 2) {
    pw = pw * a2;
    even += b[k] * pw;
    odd += b[k + 1] * pw;
  }
  u = a * odd;
  v = even;
}

template <typename M>
void pade13_uv(const M& a, M& u, M& v) {
  const auto& b = kPade13;
  const auto n = a.rows();
  const M id = M::Identity(n, n);
  const M a2 = a * a;
  const M a4 = a2 * a2;
  const M a6 = a4 * a2;
  M tmp = b[13] * a6 + b[11] * a4 + b[9] * a2;
  u = a * (a6 * tmp + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  tmp = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * tmp + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace detail

/// Matrix exponential by Pade approximation with scaling and squaring.
/// The diagonal Pade approximant of a skew matrix is exactly orthogonal,
/// so exponentials of skew matrices stay on O(d) up to rounding.
template <typename Derived>
typename Derived::PlainObject expm(const Eigen::MatrixBase<Derived>& a_in) {
  using M = typename Derived::PlainObject;
  const auto n = a_in.rows();
  if (a_in.cols() != n) throw ArgumentError("expm: matrix must be square");
  if (n == 0) return M(0, 0);
  M a = a_in;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  M u(n, n), v(n, n);
  int squarings = 0;
  if (norm1 <= detail::kTheta3) {
    detail::pade_uv(a, detail::kPade3, u, v);
  } else if (norm1 <= detail::kTheta5) {
    detail::pade_uv(a, detail::kPade5, u, v);
  } else if (norm1 <= detail::kTheta7) {
    detail::pade_uv(a, detail::kPade7, u, v);
  } else if (norm1 <= detail::kTheta9) {
    detail::pade_uv(a, detail::kPade9, u, v);
  } else {
    if (norm1 > detail::kTheta13) {
      squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / detail::kTheta13))));
      a /= std::ldexp(1.0, squarings);
    }
    detail::pade13_uv(a, u, v);
  }
  M r;
  if constexpr (M::RowsAtCompileTime != Eigen::Dynamic && M::RowsAtCompileTime <= 4) {
    r = (v - u).inverse() * (v + u);  // closed-form inverse for tiny fixed sizes
  } else {
    r = (v - u).partialPivLu().solve(v + u);
  }
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

}  // namespace polydiff
