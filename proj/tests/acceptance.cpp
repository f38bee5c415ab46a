// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "counterexample_table.hpp"
#include "polydiff/counterexample.hpp"
#include "polydiff/generator.hpp"
#include "polydiff/liealg.hpp"
#include "polydiff/simulate.hpp"
#include "polydiff/sos.hpp"

using namespace polydiff;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::mt19937_64& rng() {
  static std::mt19937_64 r(20240611);
  return r;
}

Matrix randn(int rows, int cols) {
  std::normal_distribution<double> g;
  Matrix a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = g(rng());
  return a;
}

Matrix random_kernel_element(int d, double scale) {
  const auto m = binomial(d, 2);
  Matrix k = Matrix::Zero(m, m);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (const auto& e : k_basis(d)) k += u(rng()) * e.matrix.matrix();
  return k;
}

// Distance of s from span K, by least squares on the vectorised basis.
double distance_from_kernel(int d, const Matrix& s) {
  const auto ks = k_basis(d);
  if (ks.empty()) return s.norm();
  Matrix basis(s.size(), static_cast<Eigen::Index>(ks.size()));
  for (std::size_t i = 0; i < ks.size(); ++i) basis.col(static_cast<Eigen::Index>(i)) = ks[i].matrix.matrix().reshaped();
  const Vector v = s.reshaped();
  const Vector coef = basis.colPivHouseholderQr().solve(v);
  return (v - basis * coef).norm();
}

double reconstruction_residual(const HMatrix& h, const std::vector<SkewMatrix>& factors) {
  return (cmap_from_factors(h.d(), factors).coeff_vector() - c_H_map(h).coeff_vector()).cwiseAbs().maxCoeff();
}

Polynomial coord(int d, int i) { return Polynomial::variable(d, i); }

// ---- criteria ----

Outcome dimension_formulas() {
  Outcome o;
  const auto t0 = Clock::now();
  const int c_expected[] = {1, 6, 20, 50, 105};
  const int k_expected[] = {0, 0, 1, 5, 15};
  for (int d = 2; d <= 6; ++d) {
    const auto cs = c_space_basis(d);
    Matrix stacked(cs.front().coeff_vector().size(), static_cast<Eigen::Index>(cs.size()));
    for (std::size_t i = 0; i < cs.size(); ++i) stacked.col(static_cast<Eigen::Index>(i)) = cs[i].coeff_vector();
    const int c_rank = numerical_rank(stacked);
    const auto ks = k_basis(d);
    int k_rank = 0;
    if (!ks.empty()) {
      Matrix kv(binomial(d, 2) * binomial(d, 2), static_cast<Eigen::Index>(ks.size()));
      for (std::size_t i = 0; i < ks.size(); ++i) kv.col(static_cast<Eigen::Index>(i)) = ks[i].matrix.matrix().reshaped();
      k_rank = numerical_rank(kv);
    }
    o.detail << " d=" << d << ":" << c_rank << "/" << k_rank;
    o.require(c_rank == c_expected[d - 2] && c_rank == d * d * (d * d - 1) / 12, "rank C at d=" + std::to_string(d));
    o.require(k_rank == k_expected[d - 2], "rank K at d=" + std::to_string(d));
  }
  const double secs = seconds_since(t0);
  o.detail << " time=" << secs << "s";
  o.require(secs < 5.0, "runtime");
  return o;
}

Outcome plucker_identity() {
  Outcome o;
  double worst = 0.0;
  for (int d : {5, 6}) {
    const auto ks = k_basis(d);
    for (int t = 0; t < 1000; ++t) {
      const SkewMatrix a = SkewMatrix::from_coords(d, randn(static_cast<int>(binomial(d, 2)), 1));
      for (const auto& k : ks) {
        const double p = plucker_eval(a, k.quad);
        const double q = 0.25 * inner(a, h_action(k.matrix, a));
        worst = std::max(worst, std::abs(q - p) / std::max(1.0, std::abs(p)));
      }
    }
  }
  o.detail << " max_rel_err=" << worst;
  o.require(worst <= 1e-12, "relative error");
  return o;
}

Outcome counterexample_replication() {
  Outcome o;
  const auto t0 = Clock::now();
  const CounterexampleReport r = counterexample_d6();
  o.detail << " charpoly_err=" << r.charpoly_error << " <H,B>=" << r.h_inner << " max|<K,B>|=" << r.max_k_inner;
  o.require(r.charpoly.size() == 16 && r.charpoly_error <= 1e-8, "characteristic polynomial");
  o.require(r.h_inner < -0.1, "<H,B>");
  o.require(r.max_k_inner <= 1e-10, "<K,B>");
  const HMatrix h = counterexample_d6_h();
  const SosVerdict v = sos_check(h);
  o.detail << " sos=" << to_string(v.status);
  o.require(v.status == SosStatus::Infeasible, "sos_check status");
  o.require(v.status == SosStatus::Infeasible && verify_certificate(h, v.certificate).valid, "certificate");
  const CMap c = c_H_map(h);
  int mismatched = 0;
  for (const auto& [ij, terms] : counterexample_components())
    if (c.coeff(ij.first - 1, ij.second - 1) != component_matrix(terms)) ++mismatched;
  o.detail << " table_mismatches=" << mismatched;
  o.require(mismatched == 0, "component table");
  const double secs = seconds_since(t0);
  o.detail << " time=" << secs << "s";
  o.require(secs < 30.0, "runtime");
  return o;
}

Outcome small_d_completeness() {
  Outcome o;
  int failures = 0;
  double worst = 0.0;
  const int m = 6;
  for (int t = 0; t < 200; ++t) {
    const Matrix g = randn(m, 1 + t % (2 * m));
    const HMatrix h(4, g * g.transpose() / g.cols() + random_kernel_element(4, 3.0));
    const SosVerdict v = sos_check(h);
    if (v.status != SosStatus::Feasible) {
      ++failures;
      continue;
    }
    const double res = reconstruction_residual(h, v.factors);
    worst = std::max(worst, res);
    if (res > 1e-8) ++failures;
  }
  o.detail << " failures=" << failures << "/200 max_residual=" << worst;
  o.require(failures == 0, "all feasible");
  return o;
}

Outcome degeneracy_slice() {
  Outcome o;
  const HMatrix h = counterexample_d6_h();
  double worst = 0.0;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), z(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    // uniform point on the unit sphere of the (x1, x3, x5) coordinates
    const double c = z(rng()), phi = angle(rng()), s = std::sqrt(1.0 - c * c);
    Vector x = Vector::Zero(6);
    x(0) = s * std::cos(phi);
    x(2) = c;
    x(4) = s * std::sin(phi);
    const double x1 = x(0), x5 = x(4);
    std::vector<double> expected = {0.0, (x1 + x5) * (x1 + x5), 2.0 - x1 * x1, 2.0 - x5 * x5, 2.0, 2.0};
    std::sort(expected.begin(), expected.end());
    Eigen::SelfAdjointEigenSolver<Matrix> es(c_H_eval(h, x), Eigen::EigenvaluesOnly);
    for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(es.eigenvalues()(i) - expected[i]));
  }
  o.detail << " max_err=" << worst;
  o.require(worst <= 1e-9, "eigenvalue multiset");
  return o;
}

void check_mc(Outcome& o, const char* label, const MomentEstimate& mc, double exact) {
  const double z = mc.std_error > 0 ? std::abs(mc.estimate - exact) / mc.std_error : 0.0;
  o.detail << " " << label << ": mc=" << mc.estimate << " exact=" << exact << " z=" << z;
  o.require(std::abs(mc.estimate - exact) <= 3.0 * mc.std_error, label);
}

Outcome moments_vs_monte_carlo() {
  Outcome o;
  const auto t0 = Clock::now();
  const double T = 1.0, h = 1e-3;
  const std::int64_t paths = 100000;

  const Vector e1 = Vector::Unit(3, 0);
  const SphereModel bm(HMatrix::identity(3), -Matrix::Identity(3, 3));
  const double g1 = moment(bm, coord(3, 0), e1, T, 1);
  o.detail << " G1_err=" << std::abs(g1 - std::exp(-T));
  o.require(std::abs(g1 - std::exp(-T)) <= 1e-12, "G1 closed form");
  const Ensemble sphere = simulate_ensemble(EnsembleSpec::sphere(SkewDrive::brownian(3), e1, T, h, 101, paths));
  check_mc(o, "sphere", mc_moment(sphere, coord(3, 0)), g1);

  // d = 1 Jacobi: dX = (b + B X) dt + sqrt(a (1 - X^2)) dW
  const double b = 0.1, B = -1.0, a = 0.5;
  const Vector x0{{0.3}};
  const BallModel jac(Matrix::Constant(1, 1, a), HMatrix(1), Vector{{b}}, Matrix::Constant(1, 1, B));
  const double mean = moment(jac, coord(1, 0), x0, T, 1);
  const double second = moment(jac, coord(1, 0) * coord(1, 0), x0, T, 2);
  // oracle: m1' = b + B m1, m2' = 2 b m1 + 2 B m2 + a (1 - m2), by RK4
  const auto rhs = [&](double m1, double m2) { return std::pair{b + B * m1, 2 * b * m1 + 2 * B * m2 + a * (1 - m2)}; };
  double m1 = x0(0), m2 = x0(0) * x0(0);
  const int n = 20000;
  const double dt = T / n;
  for (int i = 0; i < n; ++i) {
    const auto k1 = rhs(m1, m2);
    const auto k2 = rhs(m1 + 0.5 * dt * k1.first, m2 + 0.5 * dt * k1.second);
    const auto k3 = rhs(m1 + 0.5 * dt * k2.first, m2 + 0.5 * dt * k2.second);
    const auto k4 = rhs(m1 + dt * k3.first, m2 + dt * k3.second);
    m1 += dt / 6 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first);
    m2 += dt / 6 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second);
  }
  o.require(std::abs(mean - m1) <= 1e-10 && std::abs(second - m2) <= 1e-10, "Jacobi generator vs ODE");
  const Ensemble jacobi = simulate_ensemble(EnsembleSpec::ball(Vector{{b}}, Matrix::Constant(1, 1, B),
                                                               Matrix::Constant(1, 1, a), SkewDrive(1), x0, T, h, 102,
                                                               paths));
  check_mc(o, "jacobi_mean", mc_moment(jacobi, coord(1, 0)), mean);
  check_mc(o, "jacobi_second", mc_moment(jacobi, coord(1, 0) * coord(1, 0)), second);
  const double secs = seconds_since(t0);
  o.detail << " time=" << secs << "s";
  o.require(secs < 60.0, "runtime");
  return o;
}

Outcome sphere_norm_preservation() {
  Outcome o;
  double worst = 0.0;
  std::int64_t checked = 0;
  const SkewDrive drives[] = {SkewDrive::brownian(3),
                              SkewDrive(SkewMatrix::from_coords(5, randn(10, 1)),
                                        {SkewMatrix::from_coords(5, randn(10, 1)), SkewMatrix::from_coords(5, randn(10, 1))})};
  for (const SkewDrive& dr : drives) {
    const Vector x0 = Vector::Unit(dr.d, 0);
    const Ensemble e = simulate_ensemble(EnsembleSpec::sphere(dr, x0, 1.0, 1e-3, 7, 1000));
    worst = std::max(worst, e.max_sphere_dev.maxCoeff());
    checked += e.total_steps();
  }
  o.detail << " steps=" << checked << " max_dev=" << worst;
  o.require(worst <= 1e-12, "norm deviation");
  return o;
}

Outcome boundary_dichotomy() {
  Outcome o;
  const double nu = 0.25, T = 5.0, h = 1e-3, threshold = 1.0 - 1e-3;
  const SkewDrive dr(SkewMatrix(2), {0.5 * elementary_skew(1, 2)});
  const Vector x0{{0.3, 0.0}};
  struct Case {
    double ratio;
    BoundaryBehaviour expected;
    bool interior;
  };
  for (const Case& c : {Case{2.0, BoundaryBehaviour::InteriorInvariant, true},
                        Case{0.2, BoundaryBehaviour::MayAttainBoundary, false}}) {
    const double kappa = c.ratio * nu * nu;
    const BoundaryReport br = boundary_attainment(scalar_ball_model(kappa, nu, dr));
    const Ensemble e = simulate_ensemble(EnsembleSpec::scalar(kappa, nu, dr, x0, T, h, 303, 10000));
    const double frac = e.proximity_fraction(threshold);
    o.detail << " ratio=" << c.ratio << ":" << to_string(br.behaviour) << " fraction=" << frac;
    o.require(br.behaviour == c.expected, "classification at ratio " + std::to_string(c.ratio));
    o.require(c.interior ? frac <= 1e-3 : frac >= 0.05, "proximity fraction at ratio " + std::to_string(c.ratio));
  }
  return o;
}

Outcome density_checker() {
  Outcome o;
  for (int d = 3; d <= 6; ++d) {
    const SphereDensityReport r = density_check_sphere(SkewDrive::brownian(d), Vector::Unit(d, 0));
    o.require(r.dim_g == binomial(d, 2) && r.has_smooth_density, "D-basis drive at d=" + std::to_string(d));
  }
  auto s = [](int i, int j) { return SkewMatrix::from_dense(elementary_dense(i, j, 4)); };
  const SkewDrive block(s(1, 2), {s(3, 4)});
  const SphereDensityReport generic = density_check_sphere(block, Vector{{1.0, 2.0, 0.5, -1.0}}.normalized());
  const SphereDensityReport e3 = density_check_sphere(block, Vector::Unit(4, 2));
  o.detail << " block: dims=(" << generic.dim_g << "," << generic.dim_h << ") generic=" << generic.has_smooth_density
           << " e3=" << e3.has_smooth_density;
  o.require(generic.dim_g == 1 && generic.dim_h == 2, "block dims");
  o.require(!generic.has_smooth_density, "generic x0");
  o.require(e3.has_smooth_density, "x0 = e3");
  return o;
}

Outcome witness_honesty() {
  Outcome o;
  int feasible = 0, infeasible = 0, undecided = 0, bad = 0;
  const int dims[] = {3, 4, 6};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const int d = dims[t % 3];
    const int m = static_cast<int>(binomial(d, 2));
    const Matrix g = randn(m, m);
    // odd trials are pushed below the cone so both verdicts get exercised
    const double shift = t % 2 == 0 ? 0.0 : 1.5 * u(rng());
    const HMatrix h(d, g * g.transpose() / m - shift * Matrix::Identity(m, m) + random_kernel_element(d, 1.0));
    const SosVerdict v = sos_check(h, 1e-9, 4000);
    if (v.status == SosStatus::Feasible) {
      ++feasible;
      Eigen::SelfAdjointEigenSolver<Matrix> es(sym_part(v.h_star), Eigen::EigenvaluesOnly);
      const bool ok = es.eigenvalues()(0) >= -1e-9 &&
                      distance_from_kernel(d, v.h_star - h.matrix()) <= 1e-9 * std::max(1.0, h.matrix().norm()) &&
                      reconstruction_residual(h, v.factors) <= 1e-8 * std::max(1.0, h.matrix().norm());
      if (!ok) ++bad;
    } else if (v.status == SosStatus::Infeasible) {
      ++infeasible;
      const Matrix b = sym_part(v.certificate);
      Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
      double k_inner = 0.0;
      for (const auto& k : k_basis(d)) k_inner = std::max(k_inner, std::abs((k.matrix.matrix().array() * b.array()).sum()));
      const double hb = (h.matrix().array() * b.array()).sum();
      if (!(es.eigenvalues()(0) >= -1e-9 && k_inner <= 1e-9 && hb < -1e-9)) ++bad;
    } else {
      ++undecided;
    }
  }
  o.detail << " feasible=" << feasible << " infeasible=" << infeasible << " undecided=" << undecided
           << " unverified_witnesses=" << bad;
  o.require(bad == 0, "witness re-verification");
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"dimension formulas", dimension_formulas},
      {"Plucker identity", plucker_identity},
      {"counterexample replication", counterexample_replication},
      {"d <= 4 SOS completeness", small_d_completeness},
      {"counterexample degeneracy slice", degeneracy_slice},
      {"moment formula vs Monte Carlo", moments_vs_monte_carlo},
      {"sphere norm preservation", sphere_norm_preservation},
      {"boundary dichotomy", boundary_dichotomy},
      {"density checker", density_checker},
      {"witness honesty", witness_honesty},
  };
  int failed = 0, n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d (%s): %s%s (%.2fs)\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
