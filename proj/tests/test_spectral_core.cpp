#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sib/spectral_core.hpp"

using namespace sib;
using std::numbers::pi;

namespace {

GridPtr square_pi(int n = 8) { return make_grid(pi, pi, n, n); }

Table<double> samples_of(const GridPtr &g, auto fn) {
  Table<double> s(g->Nx(), g->Ny());
  for (int m = 1; m <= g->Ny(); ++m)
    for (int j = 1; j <= g->Nx(); ++j) s(j - 1, m - 1) = fn(g->node_x(j), g->node_y(m));
  return s;
}

RealField sinxsiny(const GridPtr &g) {
  return analyze<double>(samples_of(g, [](double x, double y) { return std::sin(x) * std::sin(y); }), g);
}

// Random field whose coefficients decay like (k l)^-decay.
template <class Scalar>
Field<Scalar> random_field(const GridPtr &g, std::mt19937_64 &rng, double decay = 0.0) {
  std::normal_distribution<double> nd;
  Field<Scalar> f(g);
  for (int l = 1; l <= g->Ny(); ++l)
    for (int k = 1; k <= g->Nx(); ++k) {
      const double w = std::pow(static_cast<double>(k) * l, -decay);
      if constexpr (is_complex_v<Scalar>)
        f(k, l) = Complex(nd(rng), nd(rng)) * w;
      else
        f(k, l) = nd(rng) * w;
    }
  return f;
}

}  // namespace

TEST(Grid, EigenvaluesOnSquare) {
  auto g = square_pi();
  EXPECT_NEAR(g->eigenvalue(1, 1), 2.0, 1e-14);
  EXPECT_NEAR(g->eigenvalue(2, 1), 5.0, 1e-14);
  EXPECT_DOUBLE_EQ(g->min_eigenvalue(), g->eigenvalue(1, 1));
}

TEST(Grid, EigenvaluesOnRectangle) {
  auto g = make_grid(2 * pi, pi, 4, 4);
  EXPECT_NEAR(g->eigenvalue(1, 1), 1.25, 1e-14);
}

TEST(Grid, SpectrumIsPositiveAndMonotone) {
  auto g = make_grid(1.3, 0.7, 9, 6);
  for (int l = 1; l <= 6; ++l)
    for (int k = 1; k <= 9; ++k) {
      EXPECT_GT(g->eigenvalue(k, l), 0.0);
      if (k > 1) EXPECT_GT(g->eigenvalue(k, l), g->eigenvalue(k - 1, l));
      if (l > 1) EXPECT_GT(g->eigenvalue(k, l), g->eigenvalue(k, l - 1));
    }
}

TEST(Grid, RejectsBadArguments) {
  EXPECT_THROW(make_grid(0.0, 1.0, 4, 4), std::invalid_argument);
  EXPECT_THROW(make_grid(1.0, -1.0, 4, 4), std::invalid_argument);
  EXPECT_THROW(make_grid(1.0, 1.0, 0, 4), std::invalid_argument);
  EXPECT_THROW(make_grid(1.0, 1.0, 4, -2), std::invalid_argument);
}

TEST(Transforms, AnalyzeSingleModes) {
  auto g = square_pi();
  RealField f = sinxsiny(g);
  EXPECT_NEAR(f(1, 1), pi / 2, 1e-13);
  EXPECT_NEAR(f.coeffs().abs().sum() - std::abs(f(1, 1)), 0.0, 1e-13);

  RealField f2 = analyze<double>(samples_of(g, [](double x, double y) { return std::sin(2 * x) * std::sin(y); }), g);
  EXPECT_NEAR(f2(2, 1), pi / 2, 1e-13);
  EXPECT_NEAR(f2.coeffs().abs().sum() - std::abs(f2(2, 1)), 0.0, 1e-13);

  RealField z = analyze<double>(Table<double>::Zero(8, 8), g);
  EXPECT_TRUE(z.is_zero());
}

TEST(Transforms, SynthesizeBasisElement) {
  auto g = square_pi();
  auto s = synthesize(RealField::basis(g, 1, 1));
  auto expect = samples_of(g, [](double x, double y) { return 2.0 / pi * std::sin(x) * std::sin(y); });
  EXPECT_LT((s - expect).abs().maxCoeff(), 1e-14);
  EXPECT_EQ(synthesize(RealField(g)).abs().maxCoeff(), 0.0);
}

TEST(Transforms, AnalyzeRejectsShapeMismatch) {
  auto g = square_pi();
  EXPECT_THROW(analyze<double>(Table<double>::Zero(7, 8), g), std::invalid_argument);
}

TEST(Transforms, RoundTripIsIdentity) {
  std::mt19937_64 rng(7);
  auto g = make_grid(1.7, 2.3, 13, 10);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    Table<Complex> s(13, 10);
    for (auto &x : s.reshaped()) x = Complex(nd(rng), nd(rng));
    auto back = synthesize(analyze<Complex>(s, g));
    EXPECT_LT((back - s).abs().maxCoeff() / s.abs().maxCoeff(), 1e-13);

    auto f = random_field<double>(g, rng);
    auto f2 = analyze<double>(synthesize(f), g);
    EXPECT_LT((f2.coeffs() - f.coeffs()).abs().maxCoeff() / f.coeffs().abs().maxCoeff(), 1e-13);
  }
}

TEST(Product, ZeroFactorGivesZero) {
  auto g = square_pi();
  auto p = product_dealiased(RealField(g), sinxsiny(g));
  EXPECT_TRUE(p.is_zero());
}

TEST(Product, SquareOfFundamentalMode) {
  // ||sin^2 x sin^2 y||_2 = 3 pi / 8; the retained-mode projection misses only
  // the algebraically small tail beyond mode 64.
  auto g = make_grid(pi, pi, 64, 64);
  auto f = sinxsiny(g);
  auto p = product_dealiased(f, f);
  EXPECT_NEAR(sobolev_norm(p, 0.0), 3 * pi / 8, 1e-8);
  EXPECT_LE(sobolev_norm(p, 0.0), 3 * pi / 8);
}

TEST(Product, MatchesBruteForceGalerkinOracle) {
  std::mt19937_64 rng(11);
  const int nx = 7, ny = 5;
  const double lx = 1.9, ly = 1.1;
  auto g = make_grid(lx, ly, nx, ny);
  for (int trial = 0; trial < 3; ++trial) {
    auto a = random_field<double>(g, rng);
    auto b = random_field<double>(g, rng);
    std::vector<double> av(a.coeffs().data(), a.coeffs().data() + nx * ny);
    std::vector<double> bv(b.coeffs().data(), b.coeffs().data() + nx * ny);
    auto ref = oracle::galerkin_product(av, bv, nx, ny, lx, ly);
    auto p = product_dealiased(a, b);
    double err = 0.0, nrm = 0.0;
    for (int i = 0; i < nx * ny; ++i) {
      err += std::pow(p.coeffs().data()[i] - ref[i], 2);
      nrm += ref[i] * ref[i];
    }
    EXPECT_LT(std::sqrt(err / nrm), 1e-12);
  }
}

TEST(Product, ComplexProductIsBilinearInParts) {
  std::mt19937_64 rng(3);
  auto g = make_grid(pi, 2.0, 9, 11);
  auto v = random_field<double>(g, rng, 1.0);
  auto u = random_field<Complex>(g, rng, 1.0);
  RealField ur(g, u.coeffs().real()), ui(g, u.coeffs().imag());
  auto p = product_dealiased(v, u);
  auto pr = product_dealiased(v, ur), pi_ = product_dealiased(v, ui);
  EXPECT_LT((p.coeffs().real() - pr.coeffs()).abs().maxCoeff(), 1e-13);
  EXPECT_LT((p.coeffs().imag() - pi_.coeffs()).abs().maxCoeff(), 1e-13);

  auto m = modulus_squared(u);
  auto m2 = product_dealiased(ur, ur) + product_dealiased(ui, ui);
  EXPECT_LT((m.coeffs() - m2.coeffs()).abs().maxCoeff(), 1e-13);
}

TEST(Product, GridMismatchThrows) {
  auto a = RealField(square_pi(8));
  auto b = RealField(square_pi(9));
  EXPECT_THROW(product_dealiased(a, b), std::invalid_argument);
}

TEST(Norms, SobolevNormsOfEigenfunction) {
  auto f = sinxsiny(square_pi());
  EXPECT_NEAR(sobolev_norm(f, 0.0), pi / 2, 1e-13);
  EXPECT_NEAR(sobolev_norm(f, 1.0), std::sqrt(2.0) * pi / 2, 1e-13);
  EXPECT_NEAR(sobolev_norm(f, -0.5), std::pow(2.0, -0.25) * pi / 2, 1e-13);
  EXPECT_THROW(sobolev_norm(f, 0.75), std::invalid_argument);
}

TEST(Norms, LpNormOfEigenfunction) {
  auto g = square_pi();
  auto f = sinxsiny(g);
  EXPECT_NEAR(lp_norm(f, 4.0), std::sqrt(3 * pi / 8), 1e-12);
  EXPECT_NEAR(lp_norm(f, 2.0), sobolev_norm(f, 0.0), 1e-6);
  EXPECT_EQ(lp_norm(RealField(g), 4.0), 0.0);
  EXPECT_EQ(lp_norm(RealField(g), 7.5), 0.0);
  EXPECT_THROW(lp_norm(f, 1.5), std::invalid_argument);
}

TEST(Norms, ParsevalAgainstQuadrature) {
  std::mt19937_64 rng(5);
  auto g = make_grid(2.1, 1.4, 12, 15);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = random_field<Complex>(g, rng, 1.0);
    const double l2 = sobolev_norm(f, 0.0);
    EXPECT_LE(std::abs(lp_norm(f, 2.0) - l2), 1e-6 * l2);
  }
}
