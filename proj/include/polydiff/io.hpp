#pragma once

// JSON encoding of matrices, coefficient objects, models, polynomials and
// reports. Objects keep insertion order so output is stable byte for byte.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polydiff/generator.hpp"
#include "polydiff/liealg.hpp"
#include "polydiff/simulate.hpp"

namespace polydiff {

using Json = nlohmann::ordered_json;

namespace io {

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

inline double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ArgumentError(what + ": expected a number");
  return j.get<double>();
}

inline Vector vector_from_json(const Json& j, const std::string& what, Eigen::Index n = -1) {
  if (!j.is_array()) throw ArgumentError(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  if (n >= 0 && v.size() != n) {
    throw ArgumentError(what + ": expected length " + std::to_string(n) + ", got " + std::to_string(v.size()));
  }
  return v;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what, Eigen::Index rows = -1,
                               Eigen::Index cols = -1) {
  if (!j.is_array()) throw ArgumentError(what + ": expected an array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  const Eigen::Index c = r ? static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0) : (cols >= 0 ? cols : 0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) m.row(i) = vector_from_json(j[static_cast<std::size_t>(i)], what, c);
  if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols)) {
    throw ArgumentError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                        std::to_string(r) + "x" + std::to_string(c));
  }
  return m;
}

inline int dim_from_m(Eigen::Index m) {
  for (int d = 1; d < 64; ++d)
    if (binomial(d, 2) == m) return d;
  throw ArgumentError("H: size " + std::to_string(m) + " is not d(d-1)/2 for any d");
}

inline void require_symmetric(const Matrix& a, const std::string& what) {
  if (a.size() && (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    throw ArgumentError(what + ": matrix is not symmetric");
  }
}

inline SkewMatrix skew_from_json(const Json& j, int d, const std::string& what) {
  const Matrix a = matrix_from_json(j, what, d, d);
  if (a.size() && (a + a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    throw ArgumentError(what + ": matrix is not skew-symmetric");
  }
  return SkewMatrix::from_upper(a);
}

// ---- HMatrix and CMap ----

inline Json to_json(const HMatrix& h) { return Json{{"d", h.d()}, {"H", to_json(h.matrix())}}; }

/// {"d", "H"}; d may be omitted and is then inferred from the size of H.
inline HMatrix hmatrix_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("H")) throw ArgumentError("HMatrix: expected an object with key \"H\"");
  const Matrix h = matrix_from_json(j["H"], "H");
  const int d = j.contains("d") ? static_cast<int>(number(j["d"], "d")) : dim_from_m(h.rows());
  if (h.rows() != binomial(d, 2) || h.cols() != h.rows()) {
    throw ArgumentError("H: expected " + std::to_string(binomial(d, 2)) + "x" + std::to_string(binomial(d, 2)) +
                        " for d=" + std::to_string(d));
  }
  require_symmetric(h, "H");
  return HMatrix(d, h);
}

inline std::string pair_key(int i, int j, int d) {
  return d <= 9 ? std::to_string(i) + std::to_string(j) : std::to_string(i) + "," + std::to_string(j);
}

/// {"d", "c": {"ij": Q_ij}} with 1-based i <= j and c_ij(x) = x^T Q_ij x.
inline Json to_json(const CMap& c) {
  Json e = Json::object();
  for (int i = 0; i < c.d(); ++i)
    for (int j = i; j < c.d(); ++j) e[pair_key(i + 1, j + 1, c.d())] = to_json(c.coeff(i, j));
  return Json{{"d", c.d()}, {"c", e}};
}

inline CMap cmap_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("d") || !j.contains("c")) throw ArgumentError("CMap: expected {\"d\", \"c\"}");
  const int d = static_cast<int>(number(j["d"], "d"));
  if (d < 1) throw ArgumentError("CMap: d must be >= 1");
  CMap c(d);
  for (const auto& [key, val] : j["c"].items()) {
    int i = 0, k = 0;
    const auto comma = key.find(',');
    if (comma != std::string::npos) {
      i = std::atoi(key.substr(0, comma).c_str());
      k = std::atoi(key.substr(comma + 1).c_str());
    } else if (key.size() == 2 && std::isdigit(static_cast<unsigned char>(key[0])) &&
               std::isdigit(static_cast<unsigned char>(key[1]))) {
      i = key[0] - '0';
      k = key[1] - '0';
    }
    if (i < 1 || k < 1 || i > d || k > d) throw ArgumentError("CMap: bad entry key \"" + key + "\"");
    c.set(i - 1, k - 1, matrix_from_json(val, "c[" + key + "]", d, d));
  }
  return c;
}

// ---- polynomials ----

inline Json to_json(const Polynomial& p) {
  Json terms = Json::array();
  for (const auto& [e, coef] : p.terms()) terms.push_back(Json{{"exp", e}, {"coef", coef}});
  return Json{{"terms", terms}};
}

inline Polynomial polynomial_from_json(const Json& j, int nvars = -1) {
  if (!j.is_object() || !j.contains("terms") || !j["terms"].is_array()) {
    throw ArgumentError("polynomial: expected {\"terms\": [...]}");
  }
  std::optional<Polynomial> p;
  if (nvars >= 0) p = Polynomial(nvars);
  for (const auto& t : j["terms"]) {
    if (!t.contains("exp") || !t.contains("coef")) throw ArgumentError("polynomial: term needs \"exp\" and \"coef\"");
    Exponent e;
    for (const auto& v : t["exp"]) {
      if (!v.is_number_integer()) throw ArgumentError("polynomial: exponents must be integers");
      e.push_back(v.get<int>());
    }
    if (!p) p = Polynomial(static_cast<int>(e.size()));
    if (static_cast<int>(e.size()) != p->nvars()) throw ArgumentError("polynomial: exponent length mismatch");
    p->add_term(e, number(t["coef"], "coef"));
  }
  if (!p) throw ArgumentError("polynomial: no terms and no dimension given");
  return *p;
}

/// Shorthand such as "1 - x1^2 + 0.5*x1*x2" in variables x1..xd.
inline Polynomial parse_polynomial(const std::string& s, int d) {
  Polynomial p(d);
  std::size_t i = 0;
  auto skip = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  auto fail = [&](const std::string& why) {
    throw ArgumentError("polynomial \"" + s + "\": " + why + " at position " + std::to_string(i));
  };
  skip();
  if (i == s.size()) fail("empty expression");
  bool first = true;
  while (true) {
    skip();
    if (i == s.size()) break;
    double sign = 1.0;
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1.0 : 1.0;
      ++i;
      skip();
    } else if (!first) {
      fail("expected + or -");
    }
    first = false;
    double coef = 1.0;
    Exponent e(d, 0);
    bool have_factor = false;
    while (true) {
      skip();
      if (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
        char* end = nullptr;
        coef *= std::strtod(s.c_str() + i, &end);
        i = static_cast<std::size_t>(end - s.c_str());
      } else if (i < s.size() && s[i] == 'x') {
        ++i;
        char* end = nullptr;
        const long v = std::strtol(s.c_str() + i, &end, 10);
        if (end == s.c_str() + i || v < 1 || v > d) fail("variable index must be in 1.." + std::to_string(d));
        i = static_cast<std::size_t>(end - s.c_str());
        long pw = 1;
        skip();
        if (i < s.size() && s[i] == '^') {
          ++i;
          pw = std::strtol(s.c_str() + i, &end, 10);
          if (end == s.c_str() + i || pw < 0) fail("bad exponent");
          i = static_cast<std::size_t>(end - s.c_str());
        }
        e[static_cast<std::size_t>(v - 1)] += static_cast<int>(pw);
      } else {
        fail("expected a number or a variable");
      }
      have_factor = true;
      skip();
      if (i < s.size() && s[i] == '*') {
        ++i;
        continue;
      }
      break;
    }
    if (!have_factor) fail("empty term");
    p.add_term(e, sign * coef);
  }
  return p;
}

// ---- drives and models ----

inline Json to_json(const SkewDrive& dr) {
  Json a = Json::array();
  for (const auto& ap : dr.A) a.push_back(to_json(ap.dense()));
  return Json{{"A0", to_json(dr.A0.dense())}, {"A", a}};
}

inline SkewDrive drive_from_json(const Json& j, int d) {
  if (!j.is_object()) throw ArgumentError("drive: expected an object");
  SkewMatrix a0 = j.contains("A0") ? skew_from_json(j["A0"], d, "drive.A0") : SkewMatrix(d);
  std::vector<SkewMatrix> a;
  if (j.contains("A")) {
    if (!j["A"].is_array()) throw ArgumentError("drive.A: expected an array of matrices");
    for (std::size_t p = 0; p < j["A"].size(); ++p)
      a.push_back(skew_from_json(j["A"][p], d, "drive.A[" + std::to_string(p) + "]"));
  }
  return SkewDrive(std::move(a0), std::move(a));
}

struct ModelFile {
  StateSpace space = StateSpace::Ball;
  BallModel ball;
  SphereModel sphere;
  std::optional<SkewDrive> drive;

  int d() const { return space == StateSpace::Ball ? ball.d : sphere.d; }
  const HMatrix& h() const { return space == StateSpace::Ball ? ball.h : sphere.h; }
};

/// {"space", "d", "alpha", "H", "b", "B"} plus an optional "drive". Missing
/// alpha, H and b default to zero; B is required.
inline ModelFile model_from_json(const Json& j) {
  if (!j.is_object()) throw ArgumentError("model: expected an object");
  for (const char* key : {"space", "d", "B"})
    if (!j.contains(key)) throw ArgumentError(std::string("model: missing key \"") + key + "\"");
  const std::string space = j["space"].is_string() ? j["space"].get<std::string>() : "";
  const int d = static_cast<int>(number(j["d"], "d"));
  if (d < 1) throw ArgumentError("model: d must be >= 1");
  const auto m = binomial(d, 2);
  const Matrix h = j.contains("H") ? matrix_from_json(j["H"], "H", m, m) : Matrix(Matrix::Zero(m, m));
  require_symmetric(h, "H");
  const Matrix B = matrix_from_json(j["B"], "B", d, d);
  ModelFile f;
  if (space == "ball") {
    f.space = StateSpace::Ball;
    const Matrix alpha = j.contains("alpha") ? matrix_from_json(j["alpha"], "alpha", d, d) : Matrix(Matrix::Zero(d, d));
    require_symmetric(alpha, "alpha");
    const Vector b = j.contains("b") ? vector_from_json(j["b"], "b", d) : Vector(Vector::Zero(d));
    f.ball = BallModel(alpha, HMatrix(d, h), b, B);
  } else if (space == "sphere") {
    f.space = StateSpace::Sphere;
    f.sphere = SphereModel(HMatrix(d, h), B);
  } else {
    throw ArgumentError("model: \"space\" must be \"ball\" or \"sphere\"");
  }
  if (j.contains("drive")) f.drive = drive_from_json(j["drive"], d);
  return f;
}

inline Json to_json(const BallModel& m) {
  return Json{{"space", "ball"},           {"d", m.d},         {"alpha", to_json(m.alpha)},
              {"H", to_json(m.h.matrix())}, {"b", to_json(m.b)}, {"B", to_json(m.B)}};
}

inline Json to_json(const SphereModel& m) {
  return Json{{"space", "sphere"}, {"d", m.d}, {"H", to_json(m.h.matrix())}, {"B", to_json(m.B)}};
}

inline Json to_json(const ModelFile& f) {
  Json j = f.space == StateSpace::Ball ? to_json(f.ball) : to_json(f.sphere);
  if (f.drive) j["drive"] = to_json(*f.drive);
  return j;
}

// ---- reading inputs ----

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open file \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Inline JSON, or @path to read it from a file.
inline Json parse_json_arg(const std::string& arg, const std::string& what) {
  const std::string text = (!arg.empty() && arg[0] == '@') ? read_file(arg.substr(1)) : arg;
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(what + ": malformed JSON (" + e.what() + ")");
  }
}

/// A plain path is also accepted for model files.
inline Json load_json_file_or_inline(const std::string& arg, const std::string& what) {
  if (!arg.empty() && (arg[0] == '{' || arg[0] == '[' || arg[0] == '@')) return parse_json_arg(arg, what);
  return parse_json_arg("@" + arg, what);
}

// ---- reports ----

inline Json to_json(const ConditionReport& c) {
  Json j{{"pass", c.pass}, {"margin", c.margin}};
  j["witness"] = c.witness.size() ? to_json(c.witness) : Json(nullptr);
  return j;
}

inline Json to_json(const PositivityReport& p) {
  Json j{{"status", to_string(p.status)}, {"sos", to_string(p.sos)}, {"nonneg_min", p.nonneg_min}};
  if (p.witness_x.size()) j["witness"] = Json{{"x", to_json(p.witness_x)}, {"y", to_json(p.witness_y)}};
  return j;
}

inline Json to_json(const BallValidation& v) {
  return Json{{"space", "ball"},
              {"status", to_string(v.status)},
              {"admissible", v.admissible()},
              {"conditions",
               {{"alpha_psd", to_json(v.alpha_psd)}, {"positivity", to_json(v.positivity)}, {"drift", to_json(v.drift)}}}};
}

inline Json to_json(const SphereValidation& v) {
  return Json{{"space", "sphere"},
              {"status", to_string(v.status)},
              {"admissible", v.admissible()},
              {"conditions", {{"identity", to_json(v.identity)}, {"positivity", to_json(v.positivity)}}}};
}

inline Json to_json(const BoundaryReport& b) {
  return Json{{"behaviour", to_string(b.behaviour)}, {"margin", b.margin}, {"argmax", to_json(b.argmax)}};
}

inline Json to_json(const CertificateReport& c) {
  return Json{{"valid", c.valid}, {"min_eig", c.min_eig}, {"max_k_inner", c.max_k_inner}, {"h_inner", c.h_inner}};
}

/// {"status", "witness", "margins", "iterations"}.
inline Json verdict_to_json(const HMatrix& h, const SosVerdict& v) {
  Json w = Json::object();
  if (v.status == SosStatus::Feasible) {
    w["h_star"] = to_json(v.h_star);
    Json f = Json::array();
    for (const auto& a : v.factors) f.push_back(to_json(a.dense()));
    w["factors"] = f;
    const CMap rebuilt = cmap_from_factors(h.d(), v.factors);
    w["reconstruction_residual"] = (rebuilt.coeff_vector() - c_H_map(h).coeff_vector()).cwiseAbs().maxCoeff();
  } else if (v.status == SosStatus::Infeasible) {
    w["B"] = to_json(v.certificate);
    w["check"] = to_json(verify_certificate(h, v.certificate));
  }
  const Json margins{{"primal_min_eig", v.primal_min_eig},   {"affine_residual", v.affine_residual},
                     {"dual_value", v.dual_value},           {"dual_min_eig", v.dual_min_eig},
                     {"dual_orthogonality", v.dual_orthogonality}};
  return Json{{"status", to_string(v.status)}, {"witness", w}, {"margins", margins}, {"iterations", v.iterations}};
}

inline Json to_json(const CounterexampleReport& r) {
  Json table = Json::object();
  for (int i = 0; i < r.c.d(); ++i)
    for (int j = i; j < r.c.d(); ++j) table[pair_key(i + 1, j + 1, r.c.d())] = to_json(r.c.coeff(i, j));
  return Json{{"d", r.h.d()},
              {"H", to_json(r.h.matrix())},
              {"lambda", r.cert.lambda},
              {"mu", r.cert.mu},
              {"delta", r.cert.delta},
              {"eigen_residuals", {r.eig_residual_v1, r.eig_residual_v2, r.eig_residual_v3}},
              {"<H,B>", r.h_inner},
              {"<H,B>_formula", r.h_inner_formula},
              {"max_|<K,B>|", r.max_k_inner},
              {"charpoly", to_json(r.charpoly)},
              {"charpoly_expected", to_json(r.charpoly_expected)},
              {"charpoly_error", r.charpoly_error},
              {"certificate", to_json(r.cert.b)},
              {"verification", to_json(r.verification)},
              {"c", table}};
}

inline Json to_json(const SphereDensityReport& r) {
  return Json{{"space", "sphere"},
              {"has_smooth_density", r.has_smooth_density},
              {"dim_g", r.dim_g},
              {"dim_h", r.dim_h},
              {"a0x0_in_gx0", r.a0x0_in_gx0},
              {"membership_residual", r.membership_residual},
              {"g_is_full", r.g_is_full},
              {"orbit_dim", r.orbit_dim}};
}

inline Json to_json(const BallDensityReport& r) {
  return Json{{"space", "ball"},
              {"has_smooth_density", r.has_smooth_density},
              {"dim_g_lifted", r.dim_g_lifted},
              {"target_dim", r.target_dim},
              {"alpha_rank", r.alpha_rank}};
}

inline Json to_json(const TwinReport& r) {
  return Json{{"ratio", r.ratio},
              {"uniqueness_hypothesis", r.uniqueness_hypothesis},
              {"epsilon", r.epsilon},
              {"max_divergence", r.max_divergence}};
}

inline Json to_json(const MomentEstimate& m) {
  return Json{{"estimate", m.estimate}, {"stderr", m.std_error}, {"n", m.n}};
}

}  // namespace io
}  // namespace polydiff
