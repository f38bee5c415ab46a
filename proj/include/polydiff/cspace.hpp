#pragma once

// Tangential diffusion coefficients: maps c: R^d -> S^d with quadratic
// entries and c(x)x = 0, their parameterisation c_H by symmetric m x m
// matrices H (m = C(d,2)), and the kernel of H -> c_H spanned by the
// Pluecker-relation matrices K_(i,j,k,l).

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "polydiff/polynomial.hpp"
#include "polydiff/skew.hpp"

namespace polydiff {

inline std::int64_t dim_c_space(int d) {
  return static_cast<std::int64_t>(d) * d * (static_cast<std::int64_t>(d) * d - 1) / 12;
}
inline std::int64_t dim_kernel(int d) { return binomial(d, 4); }

/// Symmetric m x m matrix indexed by skew pairs. Only the upper triangle of
/// the input is read; symmetry is exact.
class HMatrix {
 public:
  HMatrix() : HMatrix(1) {}
  explicit HMatrix(int d) : d_(d), h_(Matrix::Zero(binomial(d, 2), binomial(d, 2))) {
    if (d < 1) throw ArgumentError("HMatrix: d must be >= 1");
  }
  HMatrix(int d, const Matrix& h) : HMatrix(d) {
    if (h.rows() != h_.rows() || h.cols() != h_.cols()) {
      throw ArgumentError("HMatrix: expected " + std::to_string(h_.rows()) + "x" +
                          std::to_string(h_.rows()) + " for d=" + std::to_string(d));
    }
    h_ = h.triangularView<Eigen::Upper>();
    h_.triangularView<Eigen::StrictlyLower>() = h_.transpose().triangularView<Eigen::StrictlyLower>();
  }

  static HMatrix identity(int d) {
    const auto m = binomial(d, 2);
    return HMatrix(d, Matrix::Identity(m, m));
  }

  int d() const { return d_; }
  int m() const { return static_cast<int>(h_.rows()); }
  const Matrix& matrix() const { return h_; }
  double operator()(int p, int q) const { return h_(p, q); }

  friend HMatrix operator+(const HMatrix& a, const HMatrix& b) {
    if (a.d_ != b.d_) throw ArgumentError("HMatrix: dimension mismatch");
    return HMatrix(a.d_, a.h_ + b.h_);
  }
  friend HMatrix operator*(double s, const HMatrix& a) { return HMatrix(a.d_, s * a.h_); }

 private:
  int d_;
  Matrix h_;
};

/// Coefficient tensor of c: R^d -> S^d with c_ij(x) = x^T Q_ij x, Q_ij
/// symmetric and Q_ij = Q_ji.
class CMap {
 public:
  CMap() : CMap(1) {}
  explicit CMap(int d) : d_(d), q_(static_cast<std::size_t>(d) * d, Matrix::Zero(d, d)) {}

  int d() const { return d_; }

  const Matrix& coeff(int i, int j) const { return q_[idx(i, j)]; }

  /// Sets c_ij = c_ji = x^T q x (q is symmetrised).
  void set(int i, int j, const Matrix& q) {
    if (q.rows() != d_ || q.cols() != d_) throw ArgumentError("CMap: coefficient shape mismatch");
    q_[idx(i, j)] = sym_part(q);
    q_[idx(j, i)] = q_[idx(i, j)];
  }

  Matrix eval(const Vector& x) const {
    if (x.size() != d_) throw ArgumentError("CMap: point dimension mismatch");
    Matrix c(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = i; j < d_; ++j) c(i, j) = c(j, i) = x.dot(coeff(i, j) * x);
    return c;
  }

  /// Monomial coefficients: for i <= j, for k <= l, coefficient of x_k x_l in c_ij.
  Vector coeff_vector() const {
    const int n = d_ * (d_ + 1) / 2;
    Vector v(static_cast<Eigen::Index>(n) * n);
    Eigen::Index r = 0;
    for (int i = 0; i < d_; ++i)
      for (int j = i; j < d_; ++j) {
        const Matrix& q = coeff(i, j);
        for (int k = 0; k < d_; ++k)
          for (int l = k; l < d_; ++l) v(r++) = (k == l) ? q(k, l) : 2.0 * q(k, l);
      }
    return v;
  }

  /// C with tr c(x) = x^T C x.
  Matrix trace_form() const {
    Matrix c = Matrix::Zero(d_, d_);
    for (int i = 0; i < d_; ++i) c += coeff(i, i);
    return c;
  }

  /// Largest coefficient of the cubic identity c(x)x, which vanishes iff c is tangential.
  double tangency_residual() const {
    double worst = 0.0;
    for (int i = 0; i < d_; ++i) {
      std::map<std::array<int, 3>, double> cubic;
      for (int j = 0; j < d_; ++j) {
        const Matrix& q = coeff(i, j);
        for (int k = 0; k < d_; ++k)
          for (int l = 0; l < d_; ++l) {
            if (q(k, l) == 0.0) continue;
            std::array<int, 3> key{j, k, l};
            std::sort(key.begin(), key.end());
            cubic[key] += q(k, l);
          }
      }
      for (const auto& [key, v] : cubic) worst = std::max(worst, std::abs(v));
    }
    return worst;
  }

  /// The biquadratic form y^T c(x) y as a polynomial in (x_1..x_d, y_1..y_d).
  Polynomial biquadratic() const {
    Polynomial bq(2 * d_);
    Exponent e(2 * d_, 0);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        for (int k = 0; k < d_; ++k)
          for (int l = 0; l < d_; ++l) {
            const double v = coeff(i, j)(k, l);
            if (v == 0.0) continue;
            std::fill(e.begin(), e.end(), 0);
            e[k] += 1;
            e[l] += 1;
            e[d_ + i] += 1;
            e[d_ + j] += 1;
            bq.add_term(e, v);
          }
    return bq;
  }

  friend CMap operator+(CMap a, const CMap& b) {
    if (a.d_ != b.d_) throw ArgumentError("CMap: dimension mismatch");
    for (std::size_t k = 0; k < a.q_.size(); ++k) a.q_[k] += b.q_[k];
    return a;
  }
  friend CMap operator*(double s, CMap a) {
    for (auto& q : a.q_) q *= s;
    return a;
  }

 private:
  std::size_t idx(int i, int j) const {
    if (i < 0 || j < 0 || i >= d_ || j >= d_) throw ArgumentError("CMap: entry index out of range");
    return static_cast<std::size_t>(i) * d_ + j;
  }

  int d_;
  std::vector<Matrix> q_;
};

namespace detail {

/// Columns D_1 x, ..., D_m x.
inline Matrix skew_images(int d, const Vector& x) {
  const SkewIndexMap map(d);
  Matrix v = Matrix::Zero(d, map.m());
  int p = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      v(i, p) = x(j);
      v(j, p) = -x(i);
      ++p;
    }
  return v;
}

/// R_i with R_i(p, k) = (D_p)_{ik}: row i of every elementary skew matrix.
inline std::vector<Matrix> skew_rows(int d) {
  const SkewIndexMap map(d);
  std::vector<Matrix> rows(d, Matrix::Zero(map.m(), d));
  int p = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      rows[i](p, j) = 1.0;
      rows[j](p, i) = -1.0;
      ++p;
    }
  return rows;
}

}  // namespace detail

/// c_H(x) = sum_{p,q} h_pq D_p x x^T D_q^T.
inline Matrix c_H_eval(const HMatrix& h, const Vector& x) {
  if (x.size() != h.d()) throw ArgumentError("c_H_eval: point dimension mismatch");
  const Matrix v = detail::skew_images(h.d(), x);
  Matrix c = v * h.matrix() * v.transpose();
  c.triangularView<Eigen::StrictlyLower>() = c.transpose().triangularView<Eigen::StrictlyLower>();
  return c;
}

/// Coefficient tensor of c_H.
inline CMap c_H_map(const HMatrix& h) {
  const int d = h.d();
  const auto rows = detail::skew_rows(d);
  CMap c(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) c.set(i, j, rows[i].transpose() * h.matrix() * rows[j]);
  return c;
}

/// Coordinates z_p = a_ij of A = x y^T - y x^T.
inline Vector wedge_coords(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw ArgumentError("wedge_coords: dimension mismatch");
  const int d = static_cast<int>(x.size());
  Vector z(binomial(d, 2));
  int p = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) z(p++) = x(i) * y(j) - x(j) * y(i);
  return z;
}

/// H[A]_ij = sum_{k<l} h_{pi(i,j),pi(k,l)} a_kl.
inline SkewMatrix h_action(const HMatrix& h, const SkewMatrix& a) {
  if (a.d() != h.d()) throw ArgumentError("h_action: dimension mismatch");
  return SkewMatrix::from_coords(h.d(), h.matrix() * a.coords());
}

/// y^T c_H(x) y, evaluated as (1/2) <A, H[A]> with A = x y^T - y x^T.
inline double biquadratic_eval(const HMatrix& h, const Vector& x, const Vector& y) {
  if (x.size() != h.d() || y.size() != h.d()) {
    throw ArgumentError("biquadratic_eval: dimension mismatch");
  }
  const SkewMatrix a = SkewMatrix::from_coords(h.d(), wedge_coords(x, y));
  return 0.5 * inner(a, h_action(h, a));
}

/// The map x -> S x x^T T^T + T x x^T S^T as a coefficient tensor.
inline CMap symmetric_pair_map(const Matrix& s, const Matrix& t) {
  const int d = static_cast<int>(s.rows());
  CMap c(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const Matrix m = s.row(i).transpose() * t.row(j) + t.row(i).transpose() * s.row(j);
      c.set(i, j, m);
    }
  return c;
}

/// The basis of C built from the six families of elementary-skew products;
/// it has 2 C(d,4) + 3 C(d,3) + C(d,2) = d^2 (d^2 - 1) / 12 elements.
inline std::vector<CMap> c_space_basis(int d) {
  if (d < 2) throw ArgumentError("c_space_basis: d must be >= 2");
  auto S = [d](int i, int j) { return elementary_dense(i, j, d); };
  std::vector<CMap> out;
  for (int i = 1; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j)
      for (int k = j + 1; k <= d; ++k)
        for (int l = k + 1; l <= d; ++l) {
          out.push_back(symmetric_pair_map(S(i, j), S(k, l)));
          out.push_back(symmetric_pair_map(S(i, k), S(j, l)));
        }
  for (int i = 1; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j)
      for (int k = j + 1; k <= d; ++k) {
        out.push_back(symmetric_pair_map(S(i, j), S(i, k)));
        out.push_back(symmetric_pair_map(S(i, j), S(j, k)));
        out.push_back(symmetric_pair_map(S(i, k), S(j, k)));
      }
  for (int i = 1; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j) out.push_back(symmetric_pair_map(S(i, j), S(i, j)));
  return out;
}

struct KBasisElement {
  Quad quad;
  HMatrix matrix;
};

/// K_(i,j,k,l): the symmetric map with K[A]_ij = a_kl, K[A]_ik = -a_jl,
/// K[A]_il = a_jk (and the mirrored entries), so that
/// P_ijkl(A) = (1/4) <A, K[A]>.
inline HMatrix plucker_kernel_matrix(const Quad& q, int d) {
  const SkewIndexMap map(d);
  const auto [i, j, k, l] = q;
  Matrix h = Matrix::Zero(map.m(), map.m());
  auto put = [&](int a, int b, int c, int e, double v) {
    const int p = map.index(a, b) - 1;
    const int r = map.index(c, e) - 1;
    h(p, r) = v;
    h(r, p) = v;
  };
  put(i, j, k, l, 1.0);
  put(i, k, j, l, -1.0);
  put(i, l, j, k, 1.0);
  return HMatrix(d, h);
}

inline std::vector<KBasisElement> k_basis(int d) {
  if (d < 2) throw ArgumentError("k_basis: d must be >= 2");
  std::vector<KBasisElement> out;
  for (const Quad& q : all_quads(d)) out.push_back({q, plucker_kernel_matrix(q, d)});
  return out;
}

namespace detail {

/// Orthonormal basis of S^m under the Frobenius inner product: E_pp and
/// (E_pq + E_qp)/sqrt(2).
inline std::vector<Matrix> sym_orthonormal_basis(int m) {
  std::vector<Matrix> basis;
  const double r = 1.0 / std::sqrt(2.0);
  for (int p = 0; p < m; ++p)
    for (int q = p; q < m; ++q) {
      Matrix e = Matrix::Zero(m, m);
      if (p == q) {
        e(p, p) = 1.0;
      } else {
        e(p, q) = e(q, p) = r;
      }
      basis.push_back(std::move(e));
    }
  return basis;
}

}  // namespace detail

/// Minimum-Frobenius-norm H with c_H = c; this representative is orthogonal
/// to the kernel span{K_(i,j,k,l)}. Throws ResidualError if c is not in C.
inline HMatrix h_from_c(const CMap& c, double tol = 1e-10) {
  const int d = c.d();
  const int m = static_cast<int>(binomial(d, 2));
  const Vector target = c.coeff_vector();
  if (m == 0) {
    const double res = target.size() ? target.cwiseAbs().maxCoeff() : 0.0;
    if (res > tol) throw ResidualError("h_from_c: map is not tangential", res);
    return HMatrix(d);
  }
  const auto basis = detail::sym_orthonormal_basis(m);
  Matrix lin(target.size(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k)
    lin.col(static_cast<Eigen::Index>(k)) = c_H_map(HMatrix(d, basis[k])).coeff_vector();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(lin);
  cod.setThreshold(1e-10);
  const Vector coords = cod.solve(target);
  const double res = (lin * coords - target).norm();
  if (res > tol * std::max(1.0, target.norm())) {
    throw ResidualError("h_from_c: map is not in the tangential space (residual " +
                            std::to_string(res) + ")",
                        res);
  }
  Matrix h = Matrix::Zero(m, m);
  for (std::size_t k = 0; k < basis.size(); ++k) h += coords(static_cast<Eigen::Index>(k)) * basis[k];
  return HMatrix(d, h);
}

/// c(x) = (1/2) Hessian_y BQ(x, y) for a biquadratic form in 2d variables
/// (x_1..x_d, y_1..y_d), so that y^T c(x) y reproduces BQ.
inline CMap c_from_biquadratic(const Polynomial& bq) {
  if (bq.nvars() % 2 != 0 || bq.nvars() == 0) {
    throw ArgumentError("c_from_biquadratic: expected 2d variables (x then y)");
  }
  const int d = bq.nvars() / 2;
  std::vector<Matrix> q(static_cast<std::size_t>(d) * d, Matrix::Zero(d, d));
  for (const auto& [e, coef] : bq.terms()) {
    int xdeg = 0, ydeg = 0;
    std::vector<int> xs, ys;
    for (int v = 0; v < d; ++v) {
      xdeg += e[v];
      ydeg += e[d + v];
      for (int r = 0; r < e[v]; ++r) xs.push_back(v);
      for (int r = 0; r < e[d + v]; ++r) ys.push_back(v);
    }
    if (xdeg != 2 || ydeg != 2) {
      throw ArgumentError("c_from_biquadratic: term is not of bidegree (2,2)");
    }
    // coefficient of y_i y_j in c: y_i^2 -> c_ii, y_i y_j -> c_ij = c_ji = coef/2
    const int i = ys[0], j = ys[1];
    const double cij = (i == j) ? coef : 0.5 * coef;
    const int k = xs[0], l = xs[1];
    auto add = [&](int a, int b, double v) {
      Matrix& m = q[static_cast<std::size_t>(a) * d + b];
      if (k == l) {
        m(k, k) += v;
      } else {
        m(k, l) += 0.5 * v;
        m(l, k) += 0.5 * v;
      }
    };
    add(i, j, cij);
    if (i != j) add(j, i, cij);
  }
  CMap c(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) c.set(i, j, q[static_cast<std::size_t>(i) * d + j]);
  return c;
}

}  // namespace polydiff
