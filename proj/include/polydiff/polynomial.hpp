#pragma once

// Sparse multivariate polynomials with exact exponent keys.

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "polydiff/linalg.hpp"

namespace polydiff {

using Exponent = std::vector<int>;

inline int total_degree(const Exponent& e) { return std::accumulate(e.begin(), e.end(), 0); }

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}

  static Polynomial constant(int nvars, double c) {
    Polynomial p(nvars);
    p.add_term(Exponent(nvars, 0), c);
    return p;
  }

  /// The coordinate function x_i (0-based).
  static Polynomial variable(int nvars, int i) {
    Polynomial p(nvars);
    Exponent e(nvars, 0);
    e.at(i) = 1;
    p.add_term(e, 1.0);
    return p;
  }

  static Polynomial monomial(const Exponent& e, double c = 1.0) {
    Polynomial p(static_cast<int>(e.size()));
    p.add_term(e, c);
    return p;
  }

  int nvars() const { return nvars_; }
  const std::map<Exponent, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  void add_term(const Exponent& e, double c) {
    if (static_cast<int>(e.size()) != nvars_) throw ArgumentError("Polynomial: exponent length mismatch");
    for (int v : e)
      if (v < 0) throw ArgumentError("Polynomial: negative exponent");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  double coeff(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
  }

  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
  }

  double operator()(const Vector& x) const {
    if (x.size() != nvars_) throw ArgumentError("Polynomial: point dimension mismatch");
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
      double t = c;
      for (int i = 0; i < nvars_; ++i)
        if (e[i]) t *= std::pow(x(i), e[i]);
      s += t;
    }
    return s;
  }

  /// d/dx_i
  Polynomial derivative(int i) const {
    Polynomial out(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[i] == 0) continue;
      Exponent f = e;
      f[i] -= 1;
      out.add_term(f, c * e[i]);
    }
    return out;
  }

  /// Largest absolute coefficient.
  double max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check(b);
    Polynomial out(a.nvars_);
    Exponent e(a.nvars_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        for (int i = 0; i < a.nvars_; ++i) e[i] = ea[i] + eb[i];
        out.add_term(e, ca * cb);
      }
    return out;
  }

 private:
  void check(const Polynomial& o) const {
    if (o.nvars_ != nvars_) throw ArgumentError("Polynomial: variable count mismatch");
  }

  int nvars_ = 0;
  std::map<Exponent, double> terms_;
};

}  // namespace polydiff
