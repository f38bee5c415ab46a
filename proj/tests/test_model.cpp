#include <gtest/gtest.h>

#include <random>

#include "polydiff/model.hpp"

using namespace polydiff;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 r(321);
  return r;
}

Matrix randn(int rows, int cols) {
  std::normal_distribution<double> g;
  Matrix a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = g(rng());
  return a;
}

double quad(const Matrix& m, const Vector& b, const Vector& x) { return x.dot(m * x) + b.dot(x); }

// Dense grid on the sphere followed by projected-gradient polishing from the
// best grid points.
double grid_max(const Matrix& m, const Vector& b) {
  const int n = static_cast<int>(m.rows());
  std::vector<std::pair<double, Vector>> best;
  auto consider = [&](const Vector& x) {
    const double v = quad(m, b, x);
    if (best.size() < 8) {
      best.emplace_back(v, x);
    } else {
      auto worst = std::min_element(best.begin(), best.end(),
                                    [](const auto& a, const auto& c) { return a.first < c.first; });
      if (v > worst->first) *worst = {v, x};
    }
  };
  if (n == 2) {
    const int k = 1000000;
    for (int i = 0; i < k; ++i) {
      const double th = 2.0 * M_PI * i / k;
      consider(Vector{{std::cos(th), std::sin(th)}});
    }
  } else {
    const int na = 1000, nb = 500;
    for (int i = 0; i < na; ++i)
      for (int j = 0; j <= nb; ++j) {
        const double ph = 2.0 * M_PI * i / na, th = M_PI * j / nb;
        consider(Vector{{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)}});
      }
  }
  double out = -std::numeric_limits<double>::infinity();
  const double lr = 0.1 / std::max(1.0, m.norm() + b.norm());
  for (auto [v, x] : best) {
    for (int it = 0; it < 20000; ++it) {
      Vector g = 2.0 * m * x + b;
      g -= g.dot(x) * x;
      x = (x + lr * g).normalized();
    }
    out = std::max(out, quad(m, b, x));
  }
  return out;
}

void expect_stationary(const Matrix& m, const Vector& b, const SphereQuadReport& r) {
  EXPECT_NEAR(r.argmax.norm(), 1.0, 1e-12);
  EXPECT_LE((2.0 * sym_part(m) * r.argmax + b - 2.0 * r.multiplier * r.argmax).norm(), 1e-8);
}

BallModel ball(const Matrix& alpha, const HMatrix& h, const Vector& b, const Matrix& B) {
  return BallModel(alpha, h, b, B);
}

}  // namespace

TEST(SphereMax, Rayleigh) {
  const Matrix m = Vector{{1.0, 2.0, 3.0}}.asDiagonal();
  const auto r = sphere_max_quadratic(m, Vector::Zero(3));
  EXPECT_NEAR(r.max_value, 3.0, 1e-14);
  EXPECT_NEAR(std::abs(r.argmax(2)), 1.0, 1e-14);
  expect_stationary(m, Vector::Zero(3), r);
}

TEST(SphereMax, Linear) {
  const Vector b = Vector::Unit(4, 0);
  const auto r = sphere_max_quadratic(Matrix::Zero(4, 4), b);
  EXPECT_NEAR(r.max_value, 1.0, 1e-14);
  EXPECT_LE((r.argmax - b).norm(), 1e-12);
  expect_stationary(Matrix::Zero(4, 4), b, r);
}

TEST(SphereMax, HardCaseAdjacent) {
  const Matrix m = Vector{{2.0, 1.0}}.asDiagonal();
  const Vector b{{0.0, 1.0}};
  const auto r = sphere_max_quadratic(m, b);
  EXPECT_TRUE(r.hard_case);
  EXPECT_NEAR(r.max_value, grid_max(m, b), 1e-9);
  EXPECT_NEAR(r.max_value, 2.25, 1e-14);
  expect_stationary(m, b, r);

  // a tiny component along the leading eigenvector leaves the hard case
  const Vector b2{{1e-9, 1.0}};
  const auto r2 = sphere_max_quadratic(m, b2);
  EXPECT_FALSE(r2.hard_case);
  EXPECT_NEAR(r2.max_value, 2.25, 1e-8);
  expect_stationary(m, b2, r2);
}

TEST(SphereMax, OneDimensional) {
  Matrix m(1, 1);
  m << -0.7;
  const auto r = sphere_max_quadratic(m, Vector{{0.3}});
  EXPECT_NEAR(r.max_value, -0.4, 1e-15);
  EXPECT_EQ(r.argmax(0), 1.0);
}

TEST(SphereMax, AgreesWithGridOracle) {
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 2;
    const Matrix a = randn(n, n);
    const Matrix m = a + a.transpose();
    const Vector b = randn(n, 1) * (trial % 3 == 0 ? 0.01 : 1.0);
    const auto r = sphere_max_quadratic(m, b);
    expect_stationary(m, b, r);
    EXPECT_NEAR(r.max_value, grid_max(m, b), 1e-7) << "trial " << trial;
    EXPECT_NEAR(r.max_value, quad(m, b, r.argmax), 1e-12);
  }
}

TEST(SphereMax, StationaryOnLargerRandomProblems) {
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 6;
    const Matrix a = randn(n, n);
    const Vector b = randn(n, 1);
    const auto r = sphere_max_quadratic(a + a.transpose(), b);
    expect_stationary(a + a.transpose(), b, r);
    // no random unit vector does better
    for (int k = 0; k < 50; ++k) {
      const Vector x = randn(n, 1).normalized();
      EXPECT_LE(quad(a + a.transpose(), b, x), r.max_value + 1e-12);
    }
  }
}

TEST(AEval, Examples) {
  const int d = 3;
  const BallModel m = ball(2.0 * Matrix::Identity(d, d), HMatrix::identity(d), Vector::Zero(d),
                           -Matrix::Identity(d, d));
  EXPECT_EQ(a_eval(m, Vector::Zero(d)), m.alpha);
  const Vector x = randn(d, 1).normalized();
  EXPECT_LE((a_eval(m, x) - c_H_eval(m.h, x)).norm(), 1e-14);

  const SphereModel s(HMatrix::identity(3), -Matrix::Identity(3, 3));
  const Vector e1 = Vector::Unit(3, 0);
  EXPECT_LE((a_eval(s, e1) - (Matrix::Identity(3, 3) - e1 * e1.transpose())).norm(), 1e-15);
  EXPECT_THROW(a_eval(s, Vector::Zero(2)), ArgumentError);
}

TEST(TraceForm, IdentityH) {
  for (int d = 2; d <= 6; ++d)
    EXPECT_LE((trace_form(HMatrix::identity(d)) - (d - 1.0) * Matrix::Identity(d, d)).norm(), 1e-14);
}

TEST(ValidateBall, JacobiInterval) {
  const double sigma = 0.7;
  Matrix alpha(1, 1), B(1, 1);
  alpha << sigma * sigma;
  B << -1.0;
  const BallModel ok = ball(alpha, HMatrix(1), Vector{{0.4}}, B);
  const auto v = validate_ball(ok);
  EXPECT_TRUE(v.admissible());
  EXPECT_NEAR(v.drift.margin, -0.6, 1e-14);

  const BallModel bad = ball(alpha, HMatrix(1), Vector{{1.5}}, B);
  EXPECT_EQ(validate_ball(bad).status, Admissibility::NotAdmissible);
}

TEST(ValidateBall, IdentityHWithStrongDrift) {
  for (int d = 2; d <= 5; ++d) {
    const double lambda = (d - 1) / 2.0;
    const BallModel m = ball(Matrix::Identity(d, d), HMatrix::identity(d), Vector::Zero(d),
                             -lambda * Matrix::Identity(d, d));
    const auto v = validate_ball(m);
    EXPECT_TRUE(v.admissible()) << "d=" << d;
    EXPECT_NEAR(v.drift.margin, 0.0, 1e-12);
    EXPECT_EQ(v.positivity.status, Positivity::Verified);
  }
}

TEST(ValidateBall, OutwardDriftRejected) {
  const BallModel m = ball(Matrix::Identity(3, 3), HMatrix(3), 2.0 * Vector::Unit(3, 0), Matrix::Zero(3, 3));
  const auto v = validate_ball(m);
  EXPECT_EQ(v.status, Admissibility::NotAdmissible);
  EXPECT_NEAR(v.drift.margin, 2.0, 1e-12);
}

TEST(ValidateBall, IndefiniteAlphaRejected) {
  Matrix alpha = Matrix::Identity(2, 2);
  alpha(1, 1) = -0.1;
  const BallModel m = ball(alpha, HMatrix(2), Vector::Zero(2), -Matrix::Identity(2, 2));
  EXPECT_FALSE(validate_ball(m).alpha_psd.pass);
  EXPECT_EQ(validate_ball(m).status, Admissibility::NotAdmissible);
}

TEST(ValidateBall, NegativeHRefuted) {
  const BallModel m = ball(Matrix::Identity(3, 3), -1.0 * HMatrix::identity(3), Vector::Zero(3),
                           -5.0 * Matrix::Identity(3, 3));
  const auto v = validate_ball(m);
  EXPECT_EQ(v.positivity.status, Positivity::Refuted);
  EXPECT_EQ(v.status, Admissibility::NotAdmissible);
}

TEST(ValidateBall, CounterexamplePositivityUnverified) {
  const int d = 6;
  const BallModel m = ball(Matrix::Identity(d, d), counterexample_d6_h(), Vector::Zero(d),
                           -10.0 * Matrix::Identity(d, d));
  const auto v = validate_ball(m);
  EXPECT_EQ(v.positivity.sos, SosStatus::Infeasible);
  EXPECT_EQ(v.positivity.status, Positivity::Unverified);
  EXPECT_EQ(v.status, Admissibility::Unverified);
}

TEST(ValidateSphere, Examples) {
  for (int d = 2; d <= 5; ++d) {
    const SphereModel bm(HMatrix::identity(d), -(d - 1) / 2.0 * Matrix::Identity(d, d));
    EXPECT_TRUE(validate_sphere(bm).admissible());
  }
  const Matrix a = randn(4, 4);
  EXPECT_TRUE(validate_sphere(SphereModel(HMatrix(4), a - a.transpose())).admissible());
  const auto bad = validate_sphere(SphereModel(HMatrix(3), Matrix::Identity(3, 3)));
  EXPECT_FALSE(bad.identity.pass);
  EXPECT_NEAR(bad.identity.margin, 2.0, 1e-15);
}

TEST(BoundaryAttainment, ScalarModelThreshold) {
  const int d = 3;
  const double nu = 0.5;
  for (double ratio : {0.2, 0.9, 1.0, 1.1, 2.0}) {
    const double kappa = ratio * nu * nu;
    const BallModel m = ball(nu * nu * Matrix::Identity(d, d), HMatrix(d), Vector::Zero(d),
                             -kappa * Matrix::Identity(d, d));
    const auto r = boundary_attainment(m);
    EXPECT_EQ(r.behaviour == BoundaryBehaviour::InteriorInvariant, ratio >= 1.0) << "ratio " << ratio;
    EXPECT_NEAR(r.margin, nu * nu - kappa, 1e-14);
  }
}

TEST(BoundaryAttainment, ScalarModelWithTangentialPart) {
  // tr c_H(x) = gamma |x|^2 with H = s Id gives gamma = s (d - 1)
  const int d = 3;
  const double nu = 0.5, s = 0.3, gamma = s * (d - 1);
  const double kappa = nu * nu + gamma / 2;
  const BallModel edge = ball(nu * nu * Matrix::Identity(d, d), s * HMatrix::identity(d), Vector::Zero(d),
                              -kappa * Matrix::Identity(d, d));
  EXPECT_EQ(boundary_attainment(edge).behaviour, BoundaryBehaviour::InteriorInvariant);
  const BallModel over = ball(nu * nu * Matrix::Identity(d, d), s * HMatrix::identity(d), Vector::Zero(d),
                              -(kappa - 0.01) * Matrix::Identity(d, d));
  EXPECT_EQ(boundary_attainment(over).behaviour, BoundaryBehaviour::MayAttainBoundary);
}

TEST(BoundaryAttainment, JacobiMayAttain) {
  const double sigma = 0.8;
  Matrix alpha(1, 1), B(1, 1);
  alpha << sigma * sigma;
  B << -sigma * sigma / 2;
  const auto r = boundary_attainment(ball(alpha, HMatrix(1), Vector::Zero(1), B));
  EXPECT_EQ(r.behaviour, BoundaryBehaviour::MayAttainBoundary);
  EXPECT_NEAR(r.margin, sigma * sigma / 2, 1e-15);
}

TEST(BoundaryAttainment, StrongPullInward) {
  for (int d = 2; d <= 6; ++d) {
    const BallModel m = ball(Matrix::Identity(d, d), HMatrix::identity(d), Vector::Zero(d),
                             -10.0 * Matrix::Identity(d, d));
    EXPECT_EQ(boundary_attainment(m).behaviour, BoundaryBehaviour::InteriorInvariant);
  }
}

TEST(BoundaryAttainment, RejectsInadmissible) {
  const BallModel m = ball(Matrix::Identity(2, 2), HMatrix(2), 2.0 * Vector::Unit(2, 0), Matrix::Zero(2, 2));
  EXPECT_THROW(boundary_attainment(m), PreconditionError);
}

TEST(BallModel, PsdDiffusionOnRandomPoints) {
  const int d = 4;
  const Matrix g = randn(6, 6);
  const BallModel m = ball(Matrix::Identity(d, d), HMatrix(d, g * g.transpose()), Vector::Zero(d),
                           -20.0 * Matrix::Identity(d, d));
  const auto v = validate_ball(m);
  ASSERT_TRUE(v.admissible());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const Vector x = randn(d, 1).normalized() * std::pow(u(rng()), 1.0 / d);
    EXPECT_GE(min_eigenvalue(a_eval(m, x)), -1e-9);
  }
}

TEST(BallModel, RejectsBadShapes) {
  EXPECT_THROW(BallModel(Matrix::Identity(2, 2), HMatrix(3), Vector::Zero(3), Matrix::Zero(3, 3)), ArgumentError);
  EXPECT_THROW(SphereModel(HMatrix(3), Matrix::Zero(2, 2)), ArgumentError);
}
