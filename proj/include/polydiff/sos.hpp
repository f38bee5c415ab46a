#pragma once

// Sum-of-squares decision for c_H: is (H + K) ∩ S^m_+ nonempty?
//
// The primal side runs Dykstra's alternating projections between the affine
// set H + span K and the shifted cone {X >= eta I}. The dual side looks for
// B >= 0, tr B = 1, B ⟂ K with <H,B> < 0. Every witness is re-verified from
// scratch before it is reported.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polydiff/counterexample.hpp"
#include "polydiff/cspace.hpp"

namespace polydiff {

enum class SosStatus { Feasible, Infeasible, Undecided };

inline std::string to_string(SosStatus s) {
  switch (s) {
    case SosStatus::Feasible: return "Feasible";
    case SosStatus::Infeasible: return "Infeasible";
    case SosStatus::Undecided: return "Undecided";
  }
  return "?";
}

struct SosVerdict {
  SosStatus status = SosStatus::Undecided;
  Matrix h_star;                    // Feasible: PSD point of H + span K
  std::vector<SkewMatrix> factors;  // Feasible: c_H(x) = sum A_p x x^T A_p^T
  Matrix certificate;               // Infeasible: B
  int iterations = 0;
  double primal_min_eig = 0.0;   // min eigenvalue of the last affine iterate
  double affine_residual = 0.0;  // distance of h_star - H from span K
  double dual_value = 0.0;       // <H,B> of the last dual candidate
  double dual_min_eig = 0.0;
  double dual_orthogonality = 0.0;  // max |<K,B>|
};

struct CertificateReport {
  bool valid = false;
  double min_eig = 0.0;
  double max_k_inner = 0.0;
  double h_inner = 0.0;
};

/// B certifies that no SOS representation exists iff B >= -tol,
/// |<K,B>| <= tol for every K in the kernel basis, and <H,B> < -tol.
inline CertificateReport verify_certificate(const HMatrix& h, const Matrix& b, double tol = 1e-9) {
  CertificateReport r;
  if (b.rows() != h.m() || b.cols() != h.m()) throw ArgumentError("verify_certificate: shape mismatch");
  const Matrix bs = sym_part(b);
  r.min_eig = min_eigenvalue(bs);
  for (const auto& k : k_basis(h.d())) r.max_k_inner = std::max(r.max_k_inner, std::abs(inner(k.matrix.matrix(), bs)));
  r.h_inner = inner(h.matrix(), bs);
  r.valid = r.min_eig >= -tol && r.max_k_inner <= tol && r.h_inner < -tol;
  return r;
}

namespace detail {

/// Orthonormal basis (columns, vectorised m x m) of span K.
inline Matrix kernel_frame(int d) {
  const auto ks = k_basis(d);
  const auto m = binomial(d, 2);
  Matrix v(m * m, static_cast<Eigen::Index>(ks.size()));
  for (std::size_t k = 0; k < ks.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = ks[k].matrix.matrix().reshaped();
  return column_space(v);
}

inline Matrix project_kernel(const Matrix& frame, const Matrix& x) {
  if (frame.cols() == 0) return Matrix::Zero(x.rows(), x.cols());
  const Vector coef = frame.transpose() * x.reshaped();
  return (frame * coef).reshaped(x.rows(), x.cols());
}

/// Projection onto {X >= eta I}.
inline Matrix project_psd(const Matrix& x, double eta, double* min_eig = nullptr) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym_part(x));
  if (min_eig) *min_eig = es.eigenvalues()(0);
  const Vector ev = es.eigenvalues().cwiseMax(eta);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Turns any symmetric matrix into a dual candidate: remove the kernel
/// component, shift by a multiple of Id (which is orthogonal to K) until
/// PSD, and normalise to unit trace.
inline std::optional<Matrix> repair_dual(const Matrix& frame, const Matrix& b0) {
  Matrix b = sym_part(b0);
  b -= project_kernel(frame, b);
  b = sym_part(b);
  const double lmin = min_eigenvalue(b);
  if (lmin < 0.0) b.diagonal().array() -= lmin;
  const double tr = b.trace();
  if (!(tr > 0.0)) return std::nullopt;
  return Matrix(b / tr);
}

inline double affine_residual(const Matrix& frame, const Matrix& shift) {
  return (shift - project_kernel(frame, shift)).norm();
}

/// Exact solve when span K is a line (d = 4): maximise the concave
/// f(t) = lambda_min(H + t K) by bisection on the supergradient v^T K v.
/// Returns H + t* K and, from the two bracket ends, the dual candidate
/// a v- v-^T + (1 - a) v+ v+^T with zero inner product against K.
struct LineSolve {
  Matrix x;
  Matrix dual;
  double lmin = 0.0;
};

inline LineSolve solve_on_kernel_line(const Matrix& h, const Matrix& k) {
  struct Probe {
    double lmin, slope;
    Vector v;
  };
  auto probe = [&](double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym_part(h + t * k));
    Vector v = es.eigenvectors().col(0);
    return Probe{es.eigenvalues()(0), v.dot(k * v), v};
  };
  // K is traceless and nonzero, so f falls off in both directions
  double lo = -1.0, hi = 1.0;
  while (probe(lo).slope < 0.0 && lo > -1e300) lo *= 2.0;
  while (probe(hi).slope > 0.0 && hi < 1e300) hi *= 2.0;
  Probe plo = probe(lo), phi = probe(hi);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const Probe pm = probe(mid);
    if (pm.slope >= 0.0) {
      lo = mid;
      plo = pm;
    } else {
      hi = mid;
      phi = pm;
    }
  }
  LineSolve out;
  const double tstar = plo.lmin >= phi.lmin ? lo : hi;
  out.x = sym_part(h + tstar * k);
  out.lmin = std::max(plo.lmin, phi.lmin);
  const double a = plo.slope - phi.slope > 0.0 ? -phi.slope / (plo.slope - phi.slope) : 1.0;
  out.dual = a * plo.v * plo.v.transpose() + (1.0 - a) * phi.v * phi.v.transpose();
  return out;
}

}  // namespace detail

/// Factors A_p = sum_i u_p^i D_i from H* = sum_p u_p u_p^T.
inline std::vector<SkewMatrix> sos_decompose(const HMatrix& h_star, double tol = 1e-9) {
  const int d = h_star.d();
  std::vector<SkewMatrix> out;
  if (h_star.m() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h_star.matrix());
  const Vector& ev = es.eigenvalues();
  if (ev(0) < -tol) {
    throw ArgumentError("sos_decompose: matrix is indefinite (min eigenvalue " + std::to_string(ev(0)) + ")");
  }
  const double cut = 1e-10 * std::max(ev(ev.size() - 1), 0.0);
  for (Eigen::Index p = ev.size() - 1; p >= 0; --p) {
    if (ev(p) <= cut || ev(p) <= 0.0) break;
    out.push_back(SkewMatrix::from_coords(d, std::sqrt(ev(p)) * es.eigenvectors().col(p)));
  }
  return out;
}

/// c(x) = sum_p A_p x x^T A_p^T as a coefficient tensor.
inline CMap cmap_from_factors(int d, const std::vector<SkewMatrix>& factors) {
  CMap c(d);
  for (const auto& a : factors) {
    const Matrix ad = a.dense();
    c = c + 0.5 * symmetric_pair_map(ad, ad);
  }
  return c;
}

inline SosVerdict sos_check(const HMatrix& h, double tol = 1e-9, int max_iter = 50000) {
  const int d = h.d();
  const int m = h.m();
  SosVerdict v;
  if (m == 0) {
    v.status = SosStatus::Feasible;
    v.h_star = Matrix(0, 0);
    return v;
  }
  const Matrix& hm = h.matrix();
  const double hnorm = std::max(hm.norm(), 1e-300);
  const double margin = 1e-6 * hnorm;
  const Matrix frame = detail::kernel_frame(d);

  auto accept_feasible = [&](const Matrix& x) -> bool {
    const Matrix xs = sym_part(x);
    const double lmin = min_eigenvalue(xs);
    const double res = detail::affine_residual(frame, xs - hm);
    if (lmin < -tol || res > tol * std::max(1.0, hnorm)) return false;
    const HMatrix hs(d, xs);
    std::vector<SkewMatrix> factors;
    try {
      factors = sos_decompose(hs, tol);
    } catch (const ArgumentError&) {
      return false;
    }
    v.status = SosStatus::Feasible;
    v.h_star = hs.matrix();
    v.factors = std::move(factors);
    v.primal_min_eig = lmin;
    v.affine_residual = res;
    return true;
  };

  auto accept_infeasible = [&](const Matrix& b0) -> bool {
    const auto b = detail::repair_dual(frame, b0);
    if (!b) return false;
    v.dual_value = inner(hm, *b);
    if (v.dual_value > -margin) return false;
    const CertificateReport r = verify_certificate(h, *b, tol);
    v.dual_value = r.h_inner;
    v.dual_min_eig = r.min_eig;
    v.dual_orthogonality = r.max_k_inner;
    if (!r.valid || r.h_inner > -margin) return false;
    v.status = SosStatus::Infeasible;
    v.certificate = *b;
    return true;
  };

  if (accept_feasible(hm)) return v;

  if (frame.cols() == 1) {
    const Matrix k = frame.col(0).reshaped(m, m);
    const detail::LineSolve ls = detail::solve_on_kernel_line(hm, k);
    v.primal_min_eig = ls.lmin;
    if (ls.lmin >= -tol ? accept_feasible(ls.x) : accept_infeasible(ls.dual)) return v;
  }

  // Primal: Dykstra between A = H + span K and S_eta, first with a small
  // interior margin, then (after stagnation) with eta = 0.
  auto project_affine = [&](const Matrix& x) -> Matrix {
    return hm + detail::project_kernel(frame, x - hm);
  };
  const int primal_budget = max_iter / 2;
  const double etas[2] = {1e-6 * hnorm, 0.0};
  Matrix x = hm;
  int it = 0;
  for (double eta : etas) {
    Matrix p = Matrix::Zero(m, m), q = Matrix::Zero(m, m);
    double window_start = -1.0;
    const int stage_end = (eta > 0.0) ? primal_budget / 2 : primal_budget;
    for (; it < stage_end; ++it) {
      const Matrix y = project_affine(x + p);
      p = x + p - y;
      const Matrix xn = detail::project_psd(y + q, eta);
      q = y + q - xn;
      x = xn;
      if (it % 5 != 0) continue;
      double lmin = 0.0;
      const Matrix ys = detail::project_psd(y, 0.0, &lmin);
      v.primal_min_eig = lmin;
      v.iterations = it + 1;
      if (lmin >= -tol && accept_feasible(y)) return v;
      // the negative part of the affine iterate points across the gap
      if (accept_infeasible(ys - y)) return v;
      const double gap = (ys - y).norm();
      if (it % 1000 == 0) {
        if (window_start > 0.0 && window_start - gap < 1e-4 * window_start) break;
        window_start = gap;
      }
    }
  }

  // Dual: projected gradient for min <H,B> on {B >= 0, tr B = 1, B ⟂ K}.
  auto project_spectraplex = [&](const Matrix& b0) -> Matrix {
    Matrix b = b0, p = Matrix::Zero(m, m), q = Matrix::Zero(m, m);
    for (int k = 0; k < 100; ++k) {
      Matrix y = b + p;
      y -= detail::project_kernel(frame, y);
      y.diagonal().array() += (1.0 - y.trace()) / m;
      p = b + p - y;
      const Matrix bn = detail::project_psd(y + q, 0.0);
      q = y + q - bn;
      if ((bn - b).norm() < 1e-14) {
        b = bn;
        break;
      }
      b = bn;
    }
    return b;
  };
  Matrix b = Matrix::Identity(m, m) / m;
  const double step = 1.0 / hnorm;
  for (; it < max_iter; ++it) {
    b = project_spectraplex(b - step * hm);
    v.iterations = it + 1;
    if (it % 10 == 0 && accept_infeasible(b)) return v;
  }
  v.status = SosStatus::Undecided;
  v.iterations = max_iter;
  return v;
}

struct CounterexampleReport {
  HMatrix h;
  CounterexampleCertificate cert;
  double eig_residual_v1 = 0.0;  // |H v1 - lambda v1|
  double eig_residual_v2 = 0.0;
  double eig_residual_v3 = 0.0;
  double h_inner = 0.0;          // <H,B>
  double h_inner_formula = 0.0;  // lambda delta |v1|^2 + mu (|v2|^2 + |v3|^2)
  double max_k_inner = 0.0;
  Vector charpoly;           // det(s Id - H), coefficients of s^0..s^15
  Vector charpoly_expected;  // expanded closed-form factorisation
  double charpoly_error = 0.0;
  CMap c;
  CertificateReport verification;
};

namespace detail {

/// Product of polynomials given by ascending coefficient vectors.
inline Vector poly_mul(const Vector& a, const Vector& b) {
  Vector r = Vector::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) r(i + j) += a(i) * b(j);
  return r;
}

/// Characteristic polynomial det(s Id - S) of a symmetric matrix from its eigenvalues.
inline Vector charpoly_symmetric(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  Vector p = Vector::Ones(1);
  for (Eigen::Index i = 0; i < s.rows(); ++i) p = poly_mul(p, Vector{{-es.eigenvalues()(i), 1.0}});
  return p;
}

}  // namespace detail

inline CounterexampleReport counterexample_d6() {
  CounterexampleReport r;
  r.h = counterexample_d6_h();
  r.cert = counterexample_d6_certificate();
  const Matrix& h = r.h.matrix();
  const auto& c = r.cert;
  r.eig_residual_v1 = (h * c.v1 - c.lambda * c.v1).norm();
  r.eig_residual_v2 = (h * c.v2 - c.mu * c.v2).norm();
  r.eig_residual_v3 = (h * c.v3 - c.mu * c.v3).norm();
  r.h_inner = inner(h, c.b);
  r.h_inner_formula = c.lambda * c.delta * c.v1.squaredNorm() + c.mu * (c.v2.squaredNorm() + c.v3.squaredNorm());
  for (const auto& k : k_basis(6)) r.max_k_inner = std::max(r.max_k_inner, std::abs(inner(k.matrix.matrix(), c.b)));

  r.charpoly = detail::charpoly_symmetric(h);
  Vector e = Vector::Constant(1, std::ldexp(1.0, -5));
  for (int k = 0; k < 7; ++k) e = detail::poly_mul(e, Vector{{-2.0, 1.0}});
  e = detail::poly_mul(e, Vector{{-1.0, -2.0, 2.0}});
  const Vector phi{{1.0, 14.0, -16.0, 4.0}};
  e = detail::poly_mul(e, detail::poly_mul(phi, phi));
  r.charpoly_expected = e;
  r.charpoly_error = (r.charpoly - e).cwiseAbs().maxCoeff();
  r.c = c_H_map(r.h);
  r.verification = verify_certificate(r.h, c.b);
  return r;
}

enum class NonnegStatus { NonnegativeUpTo, NegativeWitness };

struct NonnegResult {
  NonnegStatus status = NonnegStatus::NonnegativeUpTo;
  double min_found = 0.0;
  Vector x, y;
};

/// One-sided screen: multistart minimisation of y^T c_H(x) y over pairs of
/// unit vectors. A negative value below -1e-9 refutes positivity; otherwise
/// the smallest value found is reported.
inline NonnegResult nonneg_check(const HMatrix& h, int samples = 2000, int restarts = 16, std::uint64_t seed = 0) {
  const int d = h.d();
  NonnegResult best;
  best.min_found = std::numeric_limits<double>::infinity();
  if (d < 2) {
    best.min_found = 0.0;
    return best;
  }
  const int per_restart = std::max(1, samples / std::max(1, restarts));
  auto min_eigvec = [&](const Vector& x, double* value) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c_H_eval(h, x));
    *value = es.eigenvalues()(0);
    return Vector(es.eigenvectors().col(0));
  };
  for (int r = 0; r < std::max(1, restarts); ++r) {
    std::seed_seq ss{seed, static_cast<std::uint64_t>(r)};
    std::mt19937_64 rng(ss);
    std::normal_distribution<double> g;
    auto unit = [&] {
      Vector v(d);
      for (int i = 0; i < d; ++i) v(i) = g(rng);
      return Vector(v.normalized());
    };
    Vector x = unit(), y = unit();
    double val = biquadratic_eval(h, x, y);
    for (int s = 1; s < per_restart; ++s) {
      const Vector xs = unit(), ys = unit();
      const double vs = biquadratic_eval(h, xs, ys);
      if (vs < val) {
        val = vs;
        x = xs;
        y = ys;
      }
    }
    // exact block minimisation: BQ(x,y) = BQ(y,x), so both blocks are eigenproblems
    for (int k = 0; k < 200; ++k) {
      double v1 = 0.0, v2 = 0.0;
      y = min_eigvec(x, &v1);
      x = min_eigvec(y, &v2);
      const double next = biquadratic_eval(h, x, y);
      const bool stalled = std::abs(val - next) <= 1e-15 * (1.0 + std::abs(val));
      val = std::min(val, next);
      if (stalled) break;
    }
    val = biquadratic_eval(h, x, y);
    if (val < best.min_found) {
      best.min_found = val;
      best.x = x;
      best.y = y;
    }
  }
  best.status = best.min_found < -1e-9 ? NonnegStatus::NegativeWitness : NonnegStatus::NonnegativeUpTo;
  return best;
}

}  // namespace polydiff
