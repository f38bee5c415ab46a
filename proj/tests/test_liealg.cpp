#include <gtest/gtest.h>

#include <random>

#include "polydiff/liealg.hpp"

using namespace polydiff;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 r(2024);
  return r;
}

Matrix randn(int rows, int cols) {
  std::normal_distribution<double> g;
  Matrix a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = g(rng());
  return a;
}

SkewMatrix rand_skew(int d) { return SkewMatrix::from_upper(randn(d, d)); }

Matrix rand_orthogonal(int d) {
  Eigen::HouseholderQR<Matrix> qr(randn(d, d));
  return qr.householderQ() * Matrix::Identity(d, d);
}

SkewMatrix S(int i, int j, int d) { return SkewMatrix::from_dense(elementary_dense(i, j, d)); }

// Block example in d = 4: rotation in the (1,2) plane as drift, noise in the (3,4) plane.
SkewDrive block_example() { return SkewDrive(S(1, 2, 4), {S(3, 4, 4)}); }

SkewDrive conjugate(const SkewDrive& dr, const Matrix& q) {
  auto c = [&](const SkewMatrix& a) { return SkewMatrix::from_upper(q * a.dense() * q.transpose()); };
  std::vector<SkewMatrix> as;
  for (const auto& a : dr.A) as.push_back(c(a));
  return SkewDrive(c(dr.A0), as);
}

}  // namespace

TEST(Bracket, SelfBracketVanishes) {
  const SkewMatrix a = rand_skew(5);
  EXPECT_EQ(bracket(a, a).coords().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Bracket, ElementaryPairMatchesHandProduct) {
  // entrywise (AB - BA)_{ik} = sum_j a_ij b_jk - b_ij a_jk
  const Matrix a = elementary_dense(1, 2, 3), b = elementary_dense(2, 3, 3);
  Matrix oracle = Matrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) oracle(i, k) += a(i, j) * b(j, k) - b(i, j) * a(j, k);
  const Matrix got = bracket(S(1, 2, 3), S(2, 3, 3)).dense();
  EXPECT_TRUE(got.isApprox(oracle));
  EXPECT_TRUE(got.isApprox(elementary_dense(1, 3, 3)));
}

TEST(Bracket, BlockExampleCommutes) {
  const SkewDrive dr = block_example();
  EXPECT_EQ(bracket(dr.A0, dr.A[0]).coords().norm(), 0.0);
  EXPECT_THROW(bracket(SkewMatrix(3), SkewMatrix(4)), ArgumentError);
}

TEST(LieSubspace, BasisIsOrthonormal) {
  const LieSubspace s = LieSubspace::span(5, {rand_skew(5), rand_skew(5), rand_skew(5)});
  const auto b = s.basis();
  ASSERT_EQ(s.dim(), 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(inner(b[i], b[j]), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(LieSubspace, DependentGeneratorsCollapse) {
  const SkewMatrix a = rand_skew(4), b = rand_skew(4);
  const LieSubspace s = LieSubspace::span(4, {a, b, 2.0 * a + (-3.0) * b});
  EXPECT_EQ(s.dim(), 2);
  EXPECT_TRUE(s.contains(a + b));
  EXPECT_FALSE(s.contains(bracket(a, b)));
}

TEST(GIdeal, BrownianDriveGeneratesEverything) {
  for (int d = 2; d <= 6; ++d) {
    const LieAlgebras alg = g_ideal(SkewDrive::brownian(d));
    EXPECT_EQ(alg.g.dim(), binomial(d, 2));
    EXPECT_EQ(alg.h.dim(), binomial(d, 2));
    EXPECT_TRUE(alg.ideal);
  }
}

TEST(GIdeal, BlockExampleDims) {
  const LieAlgebras alg = g_ideal(block_example());
  EXPECT_EQ(alg.g.dim(), 1);
  EXPECT_EQ(alg.h.dim(), 2);
  EXPECT_TRUE(alg.g.contains(S(3, 4, 4)));
  EXPECT_FALSE(alg.g.contains(S(1, 2, 4)));
}

TEST(GIdeal, DriftOnly) {
  const SkewMatrix a0 = rand_skew(4);
  const LieAlgebras alg = g_ideal(SkewDrive(a0, {}));
  EXPECT_EQ(alg.g.dim(), 0);
  EXPECT_EQ(alg.h.dim(), 1);
  EXPECT_TRUE(alg.h.contains(a0));
  const LieAlgebras zero = g_ideal(SkewDrive(4));
  EXPECT_EQ(zero.h.dim(), 0);
}

TEST(GIdeal, TwoAdjacentGeneratorsCloseUp) {
  // S12 and S23 generate so(3) in the first three coordinates
  const LieAlgebras alg = g_ideal(SkewDrive(SkewMatrix(5), {S(1, 2, 5), S(2, 3, 5)}));
  EXPECT_EQ(alg.g.dim(), 3);
  EXPECT_TRUE(alg.g.contains(S(1, 3, 5)));
}

TEST(GIdeal, DriftBracketsEnterG) {
  // [S23, S12] = S13 is in g although A0 itself is not
  const LieAlgebras alg = g_ideal(SkewDrive(S(1, 2, 4), {S(2, 3, 4)}));
  EXPECT_TRUE(alg.g.contains(S(1, 3, 4)));
  EXPECT_EQ(alg.g.dim(), 3);
  EXPECT_EQ(alg.h.dim(), 3);
}

TEST(GIdeal, IdealPropertyAndTerminationOnRandomDrives) {
  for (int t = 0; t < 20; ++t) {
    const int d = 3 + t % 4;
    std::vector<SkewMatrix> as;
    // sparse-ish drives so that g is often a proper subalgebra
    const Matrix q = rand_orthogonal(d);
    for (int p = 0; p < 1 + t % 2; ++p) {
      Matrix a = Matrix::Zero(d, d);
      a(0, 1 + p) = 1.0;
      a(1 + p, 0) = -1.0;
      as.push_back(SkewMatrix::from_upper(q * a * q.transpose()));
    }
    const SkewDrive dr(t % 3 == 0 ? rand_skew(d) : SkewMatrix(d), as);
    const LieAlgebras alg = g_ideal(dr);
    EXPECT_TRUE(alg.ideal) << alg.ideal_residual;
    EXPECT_LE(alg.layers, binomial(d, 2));
    EXPECT_LE(alg.g.dim(), alg.h.dim());
    EXPECT_LE(alg.h.dim(), alg.g.dim() + 1);
  }
}

TEST(DensitySphere, BrownianHasDensity) {
  for (int d = 3; d <= 6; ++d) {
    const SphereDensityReport r = density_check_sphere(SkewDrive::brownian(d), Vector::Unit(d, 0));
    EXPECT_TRUE(r.has_smooth_density);
    EXPECT_TRUE(r.g_is_full);
    EXPECT_EQ(r.dim_g, binomial(d, 2));
    EXPECT_EQ(r.orbit_dim, d - 1);
  }
}

TEST(DensitySphere, BlockExample) {
  const Vector generic = Vector{{1.0, 2.0, 0.5, -1.0}}.normalized();
  const SphereDensityReport r = density_check_sphere(block_example(), generic);
  EXPECT_FALSE(r.has_smooth_density);
  EXPECT_EQ(r.dim_g, 1);
  EXPECT_EQ(r.dim_h, 2);
  EXPECT_EQ(r.orbit_dim, 2);
  const SphereDensityReport e3 = density_check_sphere(block_example(), Vector::Unit(4, 2));
  EXPECT_TRUE(e3.has_smooth_density);
  EXPECT_TRUE(e3.a0x0_in_gx0);
}

TEST(DensitySphere, OrthogonalChangeOfBasisFlipsNothing) {
  const std::vector<std::pair<SkewDrive, Vector>> cases = {
      {block_example(), Vector{{1.0, 2.0, 0.5, -1.0}}.normalized()},
      {block_example(), Vector::Unit(4, 2)},
      {SkewDrive(S(1, 2, 4), {S(2, 3, 4)}), Vector{{0.5, 0.5, 0.5, 0.5}}},
      {SkewDrive(S(1, 4, 4), {S(2, 3, 4)}), Vector{{0.5, 0.5, 0.5, 0.5}}},
      {SkewDrive::brownian(4), Vector::Unit(4, 3)},
  };
  for (const auto& [dr, x0] : cases) {
    const Matrix q = rand_orthogonal(4);
    const SphereDensityReport a = density_check_sphere(dr, x0);
    const SphereDensityReport b = density_check_sphere(conjugate(dr, q), q * x0);
    EXPECT_EQ(a.has_smooth_density, b.has_smooth_density);
    EXPECT_EQ(a.dim_g, b.dim_g);
    EXPECT_EQ(a.dim_h, b.dim_h);
  }
}

TEST(DensitySphere, RejectsNonUnitStart) {
  EXPECT_THROW(density_check_sphere(SkewDrive::brownian(3), Vector{{0.5, 0.0, 0.0}}), ArgumentError);
  EXPECT_THROW(density_check_sphere(SkewDrive::brownian(3), Vector::Unit(4, 0)), ArgumentError);
}

TEST(DensityBall, IsotropicAlphaFillsTheLift) {
  // the three generators rotate into the extra coordinate; their brackets give S12
  const SkewDrive lifted = lift_drive(SkewDrive(2), Matrix::Identity(2, 2));
  EXPECT_EQ(lifted.m(), 2);
  EXPECT_TRUE(g_ideal(lifted).g.contains(S(1, 2, 3)));
  const BallDensityReport r = density_check_ball(SkewDrive(2), Matrix::Identity(2, 2), Vector::Zero(2));
  EXPECT_TRUE(r.has_smooth_density);
  EXPECT_EQ(r.target_dim, 3);
  EXPECT_EQ(r.alpha_rank, 2);
}

TEST(DensityBall, NoRadialNoiseNoDensity) {
  const BallDensityReport r = density_check_ball(SkewDrive::brownian(3), Matrix::Zero(3, 3), Vector::Unit(3, 0));
  EXPECT_FALSE(r.has_smooth_density);
  EXPECT_EQ(r.dim_g_lifted, 3);
  EXPECT_EQ(r.target_dim, 6);
  const BallDensityReport b = density_check_ball(block_example(), Matrix::Zero(4, 4), Vector::Unit(4, 0));
  EXPECT_FALSE(b.has_smooth_density);
  EXPECT_EQ(b.dim_g_lifted, 1);
}

TEST(DensityBall, RankOneAlphaWithBrownianDrive) {
  Matrix alpha = Matrix::Zero(3, 3);
  alpha(0, 0) = 0.5;
  const BallDensityReport r = density_check_ball(SkewDrive::brownian(3), alpha, Vector::Zero(3));
  EXPECT_TRUE(r.has_smooth_density);
  EXPECT_EQ(r.alpha_rank, 1);
}

TEST(DensityBall, RejectsBadInput) {
  EXPECT_THROW(density_check_ball(SkewDrive(2), -Matrix::Identity(2, 2), Vector::Zero(2)), ArgumentError);
  EXPECT_THROW(density_check_ball(SkewDrive(2), Matrix::Identity(3, 3), Vector::Zero(2)), ArgumentError);
  EXPECT_THROW(density_check_ball(SkewDrive(2), Matrix::Identity(2, 2), Vector{{1.0, 1.0}}), ArgumentError);
}
