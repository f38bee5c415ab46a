#pragma once

// Coefficient bundles for polynomial diffusions on the unit ball and the unit
// sphere, and exact checks of their admissibility conditions.

#include <cmath>
#include <limits>
#include <string>

#include "polydiff/sos.hpp"

namespace polydiff {

/// a(x) = (1 - |x|^2) alpha + c_H(x), b(x) = b + B x on the closed unit ball.
struct BallModel {
  int d = 1;
  Matrix alpha;
  HMatrix h;
  Vector b;
  Matrix B;

  BallModel() = default;
  BallModel(Matrix alpha_, HMatrix h_, Vector b_, Matrix B_)
      : d(h_.d()), alpha(std::move(alpha_)), h(std::move(h_)), b(std::move(b_)), B(std::move(B_)) {
    if (alpha.rows() != d || alpha.cols() != d || b.size() != d || B.rows() != d || B.cols() != d) {
      throw ArgumentError("BallModel: coefficient shapes do not match d=" + std::to_string(d));
    }
    alpha = sym_part(alpha);
  }
};

/// a(x) = c_H(x), b(x) = B x on the unit sphere.
struct SphereModel {
  int d = 1;
  HMatrix h;
  Matrix B;

  SphereModel() = default;
  SphereModel(HMatrix h_, Matrix B_) : d(h_.d()), h(std::move(h_)), B(std::move(B_)) {
    if (B.rows() != d || B.cols() != d) {
      throw ArgumentError("SphereModel: B must be " + std::to_string(d) + "x" + std::to_string(d));
    }
  }
};

inline Matrix a_eval(const BallModel& model, const Vector& x) {
  if (x.size() != model.d) throw ArgumentError("a_eval: point dimension mismatch");
  return (1.0 - x.squaredNorm()) * model.alpha + c_H_eval(model.h, x);
}

inline Matrix a_eval(const SphereModel& model, const Vector& x) {
  if (x.size() != model.d) throw ArgumentError("a_eval: point dimension mismatch");
  return c_H_eval(model.h, x);
}

/// C with tr c_H(x) = x^T C x, read off the coefficient tensor.
inline Matrix trace_form(const HMatrix& h) { return c_H_map(h).trace_form(); }

struct SphereQuadReport {
  double max_value = 0.0;
  Vector argmax;
  double multiplier = 0.0;
  bool hard_case = false;
};

/// max over |x| = 1 of x^T M x + b^T x.
///
/// Stationary points satisfy 2 M x + b = 2 lambda x; the global maximiser has
/// lambda >= lambda_max(M). With t = lambda - lambda_max the secular equation
/// sum_i btilde_i^2 / (4 (t + gap_i)^2) = 1 has a unique root t > 0 unless b
/// is orthogonal to the leading eigenspace and the remaining sum stays below
/// one (hard case), where t = 0 and the leading eigenvector fills the norm.
inline SphereQuadReport sphere_max_quadratic(const Matrix& m_in, const Vector& b) {
  const auto n = m_in.rows();
  if (m_in.cols() != n || b.size() != n || n == 0) throw ArgumentError("sphere_max_quadratic: shape mismatch");
  const Matrix m = sym_part(m_in);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Vector& mu = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  const Vector bt = v.transpose() * b;
  const double mu_max = mu(n - 1);
  const double scale = std::max({1.0, mu.cwiseAbs().maxCoeff(), b.norm()});
  const double eig_tol = 1e-12 * scale;

  Vector gap(n);
  double top_b2 = 0.0;
  int top_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    gap(i) = mu_max - mu(i);
    if (gap(i) <= eig_tol) {
      gap(i) = 0.0;
      top_b2 += bt(i) * bt(i);
      ++top_count;
    }
  }
  auto psi = [&](double t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = bt(i) / (2.0 * (t + gap(i)));
      s += r * r;
    }
    return s;
  };
  double rest = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (gap(i) > 0.0) rest += bt(i) * bt(i) / (4.0 * gap(i) * gap(i));

  SphereQuadReport rep;
  Vector xt = Vector::Zero(n);
  double t = 0.0;
  if (top_b2 <= 1e-28 * scale * scale && rest <= 1.0) {
    rep.hard_case = true;
    for (Eigen::Index i = 0; i < n; ++i)
      if (gap(i) > 0.0) xt(i) = bt(i) / (2.0 * gap(i));
    const double tau = std::sqrt(std::max(0.0, 1.0 - xt.squaredNorm()));
    for (Eigen::Index i = 0; i < n; ++i)
      if (gap(i) == 0.0) {
        xt(i) = tau;
        break;
      }
  } else {
    // psi is decreasing in t; psi(b_norm / 2) <= 1. Bisect on log t, then
    // polish with Newton on the nearly linear 1/sqrt(psi) - 1.
    double hi = std::max(0.5 * b.norm(), 1e-300);
    double lo = hi;
    while (psi(lo) < 1.0 && lo > 1e-300) lo *= 1e-3;
    for (int k = 0; k < 200 && hi / lo > 1.0 + 1e-15; ++k) {
      const double mid = std::sqrt(lo * hi);
      if (psi(mid) > 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    t = std::sqrt(lo * hi);
    for (int k = 0; k < 5; ++k) {
      const double p = psi(t);
      double dp = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double den = t + gap(i);
        dp -= bt(i) * bt(i) / (2.0 * den * den * den);
      }
      // g = p^{-1/2} - 1, g' = -1/2 p^{-3/2} p'
      const double g = 1.0 / std::sqrt(p) - 1.0;
      const double dg = -0.5 * dp / (p * std::sqrt(p));
      if (!(dg > 0.0)) break;
      const double tn = t - g / dg;
      if (!(tn > 0.0) || !std::isfinite(tn)) break;
      t = tn;
    }
    for (Eigen::Index i = 0; i < n; ++i) xt(i) = bt(i) / (2.0 * (t + gap(i)));
  }
  Vector x = v * xt;
  x.normalize();
  rep.argmax = x;
  rep.multiplier = mu_max + t;
  rep.max_value = x.dot(m * x) + b.dot(x);
  return rep;
}

enum class Positivity { Verified, Refuted, Unverified };

inline std::string to_string(Positivity p) {
  switch (p) {
    case Positivity::Verified: return "verified";
    case Positivity::Refuted: return "refuted";
    case Positivity::Unverified: return "unverified";
  }
  return "?";
}

struct PositivityReport {
  Positivity status = Positivity::Unverified;
  SosStatus sos = SosStatus::Undecided;
  double nonneg_min = 0.0;
  Vector witness_x, witness_y;  // set when refuted by a negative value
};

/// Three-valued positivity of c_H: an SOS decomposition verifies it; a
/// negative value of the biquadratic form refutes it; for d <= 4 SOS
/// infeasibility also refutes it since SOS and nonnegativity coincide there.
inline PositivityReport positivity_check(const HMatrix& h, std::uint64_t seed = 0) {
  PositivityReport r;
  const SosVerdict v = sos_check(h);
  r.sos = v.status;
  if (v.status == SosStatus::Feasible) {
    r.status = Positivity::Verified;
    return r;
  }
  const NonnegResult nn = nonneg_check(h, 2000, 16, seed);
  r.nonneg_min = nn.min_found;
  if (nn.status == NonnegStatus::NegativeWitness) {
    r.status = Positivity::Refuted;
    r.witness_x = nn.x;
    r.witness_y = nn.y;
  } else if (v.status == SosStatus::Infeasible && h.d() <= 4) {
    r.status = Positivity::Refuted;
  }
  return r;
}

enum class Admissibility { Admissible, NotAdmissible, Unverified };

inline std::string to_string(Admissibility a) {
  switch (a) {
    case Admissibility::Admissible: return "admissible";
    case Admissibility::NotAdmissible: return "not-admissible";
    case Admissibility::Unverified: return "unverified-positivity";
  }
  return "?";
}

struct ConditionReport {
  bool pass = false;
  double margin = 0.0;  // for inequalities: the maximum that must be <= tol
  Vector witness;
};

struct BallValidation {
  Admissibility status = Admissibility::NotAdmissible;
  ConditionReport alpha_psd;  // margin = min eigenvalue of alpha
  PositivityReport positivity;
  ConditionReport drift;  // margin = max over the sphere of b^T x + x^T B x + tr c(x) / 2
  bool admissible() const { return status == Admissibility::Admissible; }
};

struct SphereValidation {
  Admissibility status = Admissibility::NotAdmissible;
  ConditionReport identity;  // margin = max |B + B^T + C|
  PositivityReport positivity;
  bool admissible() const { return status == Admissibility::Admissible; }
};

namespace detail {

inline Admissibility combine(bool algebraic_ok, Positivity p) {
  if (!algebraic_ok || p == Positivity::Refuted) return Admissibility::NotAdmissible;
  return p == Positivity::Verified ? Admissibility::Admissible : Admissibility::Unverified;
}

}  // namespace detail

inline BallValidation validate_ball(const BallModel& model, double tol = 1e-7) {
  BallValidation r;
  r.alpha_psd.margin = min_eigenvalue(model.alpha);
  r.alpha_psd.pass = r.alpha_psd.margin >= -1e-12;
  r.positivity = positivity_check(model.h);
  const Matrix q = sym_part(model.B) + 0.5 * trace_form(model.h);
  const SphereQuadReport s = sphere_max_quadratic(q, model.b);
  r.drift.margin = s.max_value;
  r.drift.witness = s.argmax;
  r.drift.pass = s.max_value <= tol;
  r.status = detail::combine(r.alpha_psd.pass && r.drift.pass, r.positivity.status);
  return r;
}

inline SphereValidation validate_sphere(const SphereModel& model, double tol = 1e-9) {
  SphereValidation r;
  const Matrix resid = model.B + model.B.transpose() + trace_form(model.h);
  r.identity.margin = resid.size() ? resid.cwiseAbs().maxCoeff() : 0.0;
  r.identity.pass = r.identity.margin <= tol;
  r.positivity = positivity_check(model.h);
  r.status = detail::combine(r.identity.pass, r.positivity.status);
  return r;
}

enum class BoundaryBehaviour { InteriorInvariant, MayAttainBoundary };

inline std::string to_string(BoundaryBehaviour b) {
  return b == BoundaryBehaviour::InteriorInvariant ? "InteriorInvariant" : "MayAttainBoundary";
}

struct BoundaryReport {
  BoundaryBehaviour behaviour = BoundaryBehaviour::MayAttainBoundary;
  double margin = 0.0;  // max over the sphere of b^T x + x^T (B + alpha) x + tr c(x) / 2
  Vector argmax;
};

/// Whether a ball model started in the interior stays there. Throws
/// PreconditionError for a model that fails validation; a model whose
/// positivity is merely unverified is accepted.
inline BoundaryReport boundary_attainment(const BallModel& model, double tol = 1e-7) {
  const BallValidation v = validate_ball(model, tol);
  if (v.status == Admissibility::NotAdmissible) {
    throw PreconditionError("boundary_attainment: model is not admissible");
  }
  const Matrix q = sym_part(model.B + model.alpha) + 0.5 * trace_form(model.h);
  const SphereQuadReport s = sphere_max_quadratic(q, model.b);
  BoundaryReport r;
  r.margin = s.max_value;
  r.argmax = s.argmax;
  r.behaviour = s.max_value <= tol ? BoundaryBehaviour::InteriorInvariant : BoundaryBehaviour::MayAttainBoundary;
  return r;
}

}  // namespace polydiff
