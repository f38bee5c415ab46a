#pragma once

// The generator G f = 1/2 tr(a grad^2 f) + b^T grad f restricted to
// polynomials of degree <= k, and conditional moments
// E[q(X_t) | X_0 = x] = H(x)^T exp(t G_k) q.

#include <map>
#include <string>
#include <vector>

#include "polydiff/model.hpp"
#include "polydiff/polynomial.hpp"

namespace polydiff {

/// Monomials of degree <= k in d variables, graded lexicographic: by total
/// degree, then lexicographically decreasing in the exponent vector
/// (1, x1, x2, x1^2, x1 x2, x2^2, ... for d = 2).
class MonomialBasis {
 public:
  MonomialBasis(int d, int k) : d_(d), k_(k) {
    if (d < 1 || k < 0) throw ArgumentError("MonomialBasis: need d >= 1 and k >= 0");
    for (int deg = 0; deg <= k; ++deg) {
      Exponent e(d, 0);
      append_degree(e, 0, deg);
    }
    for (std::size_t i = 0; i < exps_.size(); ++i) index_[exps_[i]] = static_cast<int>(i);
  }

  int d() const { return d_; }
  int k() const { return k_; }
  int size() const { return static_cast<int>(exps_.size()); }
  const std::vector<Exponent>& exponents() const { return exps_; }
  const Exponent& operator[](int i) const { return exps_.at(static_cast<std::size_t>(i)); }

  /// Position of a monomial, or -1 if its degree exceeds k.
  int index_of(const Exponent& e) const {
    auto it = index_.find(e);
    return it == index_.end() ? -1 : it->second;
  }

  /// H(x): all basis monomials evaluated at x.
  Vector eval(const Vector& x) const {
    if (x.size() != d_) throw ArgumentError("MonomialBasis: point dimension mismatch");
    Vector h(size());
    for (int i = 0; i < size(); ++i) {
      double v = 1.0;
      for (int j = 0; j < d_; ++j)
        for (int r = 0; r < exps_[i][j]; ++r) v *= x(j);
      h(i) = v;
    }
    return h;
  }

  /// Coordinates of q; throws if deg q > k.
  Vector coords(const Polynomial& q) const {
    if (q.nvars() != d_) throw ArgumentError("MonomialBasis: polynomial has wrong number of variables");
    Vector c = Vector::Zero(size());
    for (const auto& [e, coef] : q.terms()) {
      const int i = index_of(e);
      if (i < 0) {
        throw ArgumentError("polynomial degree " + std::to_string(q.degree()) + " exceeds basis degree " +
                            std::to_string(k_));
      }
      c(i) = coef;
    }
    return c;
  }

 private:
  void append_degree(Exponent& e, int var, int remaining) {
    if (var == d_ - 1) {
      e[var] = remaining;
      exps_.push_back(e);
      e[var] = 0;
      return;
    }
    for (int p = remaining; p >= 0; --p) {
      e[var] = p;
      append_degree(e, var + 1, remaining - p);
    }
    e[var] = 0;
  }

  int d_, k_;
  std::vector<Exponent> exps_;
  std::map<Exponent, int> index_;
};

inline MonomialBasis monomial_basis(int d, int k) { return MonomialBasis(d, k); }

enum class StateSpace { Ball, Sphere };

inline std::string to_string(StateSpace s) { return s == StateSpace::Ball ? "ball" : "sphere"; }

/// Polynomial coefficients a_ij(x) and b_i(x) of a diffusion.
struct GeneratorCoefficients {
  StateSpace space = StateSpace::Ball;
  int d = 1;
  std::vector<Polynomial> a;  // row-major d x d
  std::vector<Polynomial> b;

  const Polynomial& a_entry(int i, int j) const { return a[static_cast<std::size_t>(i) * d + j]; }
};

namespace detail {

inline Polynomial quadratic_form_poly(const Matrix& q) {
  const int d = static_cast<int>(q.rows());
  Polynomial p(d);
  Exponent e(d, 0);
  for (int k = 0; k < d; ++k)
    for (int l = k; l < d; ++l) {
      const double v = (k == l) ? q(k, k) : q(k, l) + q(l, k);
      if (v == 0.0) continue;
      std::fill(e.begin(), e.end(), 0);
      e[k] += 1;
      e[l] += 1;
      p.add_term(e, v);
    }
  return p;
}

inline std::vector<Polynomial> linear_drift(const Vector& b0, const Matrix& B) {
  const int d = static_cast<int>(B.rows());
  std::vector<Polynomial> out;
  for (int i = 0; i < d; ++i) {
    Polynomial p = Polynomial::constant(d, b0.size() ? b0(i) : 0.0);
    for (int j = 0; j < d; ++j) p += B(i, j) * Polynomial::variable(d, j);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace detail

inline GeneratorCoefficients generator_coefficients(const BallModel& m) {
  GeneratorCoefficients g;
  g.space = StateSpace::Ball;
  g.d = m.d;
  const CMap c = c_H_map(m.h);
  Polynomial radial = Polynomial::constant(m.d, 1.0);
  for (int i = 0; i < m.d; ++i) radial -= Polynomial::variable(m.d, i) * Polynomial::variable(m.d, i);
  for (int i = 0; i < m.d; ++i)
    for (int j = 0; j < m.d; ++j) g.a.push_back(m.alpha(i, j) * radial + detail::quadratic_form_poly(c.coeff(i, j)));
  g.b = detail::linear_drift(m.b, m.B);
  return g;
}

inline GeneratorCoefficients generator_coefficients(const SphereModel& m) {
  GeneratorCoefficients g;
  g.space = StateSpace::Sphere;
  g.d = m.d;
  const CMap c = c_H_map(m.h);
  for (int i = 0; i < m.d; ++i)
    for (int j = 0; j < m.d; ++j) g.a.push_back(detail::quadratic_form_poly(c.coeff(i, j)));
  g.b = detail::linear_drift(Vector::Zero(m.d), m.B);
  return g;
}

/// G x^beta, expanded exactly.
inline Polynomial apply_generator(const GeneratorCoefficients& g, const Exponent& beta) {
  if (static_cast<int>(beta.size()) != g.d) throw ArgumentError("apply_generator: exponent length mismatch");
  const Polynomial f = Polynomial::monomial(beta);
  Polynomial out(g.d);
  for (int i = 0; i < g.d; ++i) {
    const Polynomial fi = f.derivative(i);
    if (fi.is_zero()) continue;
    out += g.b[i] * fi;
    for (int j = 0; j < g.d; ++j) {
      const Polynomial fij = fi.derivative(j);
      if (fij.is_zero()) continue;
      out += 0.5 * (g.a_entry(i, j) * fij);
    }
  }
  return out;
}

template <typename Model>
Polynomial apply_generator(const Model& m, const Exponent& beta) {
  return apply_generator(generator_coefficients(m), beta);
}

/// Matrix of G on Pol_k: column j holds the coordinates of G applied to the
/// j-th basis monomial.
struct GeneratorMatrix {
  MonomialBasis basis;
  Matrix G;
  StateSpace space = StateSpace::Ball;
};

inline GeneratorMatrix build_Gk(const GeneratorCoefficients& g, int k) {
  MonomialBasis basis(g.d, k);
  Matrix G = Matrix::Zero(basis.size(), basis.size());
  for (int j = 0; j < basis.size(); ++j) G.col(j) = basis.coords(apply_generator(g, basis[j]));
  return {std::move(basis), std::move(G), g.space};
}

template <typename Model>
GeneratorMatrix build_Gk(const Model& m, int k) {
  return build_Gk(generator_coefficients(m), k);
}

inline void check_state(StateSpace space, const Vector& x, double tol = 1e-10) {
  const double r = x.norm();
  if (space == StateSpace::Sphere && std::abs(r - 1.0) > tol) {
    throw ArgumentError("point is not on the unit sphere (norm " + std::to_string(r) + ")");
  }
  if (space == StateSpace::Ball && r > 1.0 + tol) {
    throw ArgumentError("point is outside the unit ball (norm " + std::to_string(r) + ")");
  }
}

/// E[q(X_t) | X_0 = x] = H(x)^T exp(t G_k) q.
inline double moment(const GeneratorMatrix& gm, const Polynomial& q, const Vector& x, double t) {
  if (t < 0.0) throw ArgumentError("moment: t must be >= 0");
  if (x.size() != gm.basis.d()) throw ArgumentError("moment: point dimension mismatch");
  check_state(gm.space, x);
  const Vector qv = gm.basis.coords(q);
  const Vector h = gm.basis.eval(x);
  return h.dot(expm(Matrix(t * gm.G)) * qv);
}

template <typename Model>
double moment(const Model& m, const Polynomial& q, const Vector& x, double t, int k) {
  if (q.degree() > k) throw ArgumentError("moment: deg q exceeds k");
  return moment(build_Gk(m, k), q, x, t);
}

}  // namespace polydiff
