#pragma once

// Skew-symmetric d x d matrices: the lexicographic pair index, the elementary
// basis D_1..D_m, Pluecker polynomials, and rank-two factorisation.
//
// Index-taking functions (pair_index, elementary_skew, plucker) are 1-based.
// Eigen matrices and SkewMatrix::operator() are 0-based.

#include <array>
#include <string>
#include <utility>

#include "polydiff/linalg.hpp"

namespace polydiff {

/// Bijection between pairs (i,j), 1 <= i < j <= d, and 1..C(d,2) in
/// lexicographic order.
class SkewIndexMap {
 public:
  explicit SkewIndexMap(int d) : d_(d), m_(static_cast<int>(binomial(d, 2))) {
    if (d < 1) throw ArgumentError("SkewIndexMap: d must be >= 1");
  }

  int d() const { return d_; }
  int m() const { return m_; }

  int index(int i, int j) const {
    if (i < 1 || j > d_ || i >= j) {
      throw ArgumentError("pair index requires 1 <= i < j <= d, got (" + std::to_string(i) +
                          "," + std::to_string(j) + ") with d=" + std::to_string(d_));
    }
    // rows 1..i-1 contribute (d-1) + ... + (d-i+1) entries
    return (i - 1) * d_ - (i - 1) * i / 2 + (j - i);
  }

  std::pair<int, int> pair(int p) const {
    if (p < 1 || p > m_) {
      throw ArgumentError("basis index " + std::to_string(p) + " outside 1.." +
                          std::to_string(m_));
    }
    int i = 1;
    int first = 1;
    while (first + (d_ - i) <= p) {
      first += d_ - i;
      ++i;
    }
    return {i, i + 1 + (p - first)};
  }

 private:
  int d_;
  int m_;
};

inline int pi_index(int i, int j, int d) { return SkewIndexMap(d).index(i, j); }

/// Skew-symmetric matrix stored by its strict upper triangle, so skewness is
/// structural. coords()(p-1) = a_{ij} with p = pi(i,j).
class SkewMatrix {
 public:
  explicit SkewMatrix(int d) : d_(d), upper_(Vector::Zero(binomial(d, 2))) {}

  static SkewMatrix from_coords(int d, const Vector& z) {
    SkewMatrix s(d);
    if (z.size() != s.upper_.size()) throw ArgumentError("SkewMatrix: coordinate length mismatch");
    s.upper_ = z;
    return s;
  }

  /// Reads the strict upper triangle of `a`; the lower triangle is ignored.
  static SkewMatrix from_upper(const Matrix& a) {
    if (a.rows() != a.cols()) throw ArgumentError("SkewMatrix: matrix must be square");
    const int d = static_cast<int>(a.rows());
    SkewMatrix s(d);
    int p = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) s.upper_(p++) = a(i, j);
    return s;
  }

  /// Checks a + a^T = 0 within tol before storing.
  static SkewMatrix from_dense(const Matrix& a, double tol = 0.0) {
    if (a.rows() != a.cols()) throw ArgumentError("SkewMatrix: matrix must be square");
    if ((a + a.transpose()).cwiseAbs().maxCoeff() > tol && a.size() > 0) {
      throw ArgumentError("SkewMatrix: input is not skew-symmetric");
    }
    return from_upper(a);
  }

  int d() const { return d_; }
  int m() const { return static_cast<int>(upper_.size()); }
  const Vector& coords() const { return upper_; }

  double operator()(int i, int j) const {
    if (i == j) return 0.0;
    if (i < j) return upper_(SkewIndexMap(d_).index(i + 1, j + 1) - 1);
    return -upper_(SkewIndexMap(d_).index(j + 1, i + 1) - 1);
  }

  Matrix dense() const {
    Matrix a = Matrix::Zero(d_, d_);
    int p = 0;
    for (int i = 0; i < d_; ++i)
      for (int j = i + 1; j < d_; ++j) {
        a(i, j) = upper_(p);
        a(j, i) = -upper_(p);
        ++p;
      }
    return a;
  }

  SkewMatrix& operator+=(const SkewMatrix& o) {
    check_same(o);
    upper_ += o.upper_;
    return *this;
  }
  SkewMatrix& operator*=(double s) {
    upper_ *= s;
    return *this;
  }
  friend SkewMatrix operator+(SkewMatrix a, const SkewMatrix& b) { return a += b; }
  friend SkewMatrix operator*(double s, SkewMatrix a) { return a *= s; }

 private:
  void check_same(const SkewMatrix& o) const {
    if (o.d_ != d_) throw ArgumentError("SkewMatrix: dimension mismatch");
  }

  int d_;
  Vector upper_;
};

/// <A,B> = tr(A^T B) = 2 sum_{i<j} a_ij b_ij.
inline double inner(const SkewMatrix& a, const SkewMatrix& b) {
  if (a.d() != b.d()) throw ArgumentError("inner: dimension mismatch");
  return 2.0 * a.coords().dot(b.coords());
}

/// D_p = S_{ij} = e_i e_j^T - e_j e_i^T with (i,j) = pi^{-1}(p).
inline SkewMatrix elementary_skew(int p, int d) {
  const SkewIndexMap map(d);
  map.pair(p);  // range check
  Vector z = Vector::Zero(map.m());
  z(p - 1) = 1.0;
  return SkewMatrix::from_coords(d, z);
}

/// Dense S_ij for 1-based i != j (S_ji = -S_ij).
inline Matrix elementary_dense(int i, int j, int d) {
  Matrix s = Matrix::Zero(d, d);
  s(i - 1, j - 1) = 1.0;
  s(j - 1, i - 1) = -1.0;
  return s;
}

using Quad = std::array<int, 4>;

/// P_ijkl(A) = a_ij a_kl - a_ik a_jl + a_il a_jk for 1-based i<j<k<l.
inline double plucker_eval(const SkewMatrix& a, const Quad& q) {
  const auto [i, j, k, l] = q;
  if (!(1 <= i && i < j && j < k && k < l && l <= a.d())) {
    throw ArgumentError("plucker_eval: quad must satisfy 1 <= i < j < k < l <= d");
  }
  auto e = [&a](int r, int s) { return a(r - 1, s - 1); };
  return e(i, j) * e(k, l) - e(i, k) * e(j, l) + e(i, l) * e(j, k);
}

/// All strictly increasing 4-tuples of 1..d in lexicographic order.
inline std::vector<Quad> all_quads(int d) {
  std::vector<Quad> out;
  for (int i = 1; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j)
      for (int k = j + 1; k <= d; ++k)
        for (int l = k + 1; l <= d; ++l) out.push_back({i, j, k, l});
  return out;
}

/// Factor a numerically rank-2 skew matrix as x y^T - y x^T.
///
/// Takes an orthonormal basis {u, v} of the range, sets gamma = u^T A v, and
/// returns x = gamma u, y = v.
inline std::pair<Vector, Vector> rank2_factor(const SkewMatrix& a, double tol = 1e-10) {
  const Matrix dense = a.dense();
  Eigen::JacobiSVD<Matrix> svd(dense, Eigen::ComputeFullU);
  const Vector& s = svd.singularValues();
  std::vector<double> sv(s.data(), s.data() + s.size());
  const double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (smax > 0.0 && s(i) > tol * smax) ++rank;
  if (rank != 2) {
    throw RankError("rank2_factor: numerical rank is " + std::to_string(rank) + ", expected 2",
                    sv);
  }
  const Vector u = svd.matrixU().col(0);
  const Vector v = svd.matrixU().col(1);
  const double gamma = u.dot(dense * v);
  return {gamma * u, v};
}

}  // namespace polydiff
