#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "dircalc/calculus.hpp"
#include "dircalc/errors.hpp"
#include "dircalc/special.hpp"
#include "dircalc/spectral_cache.hpp"

using namespace dircalc;

namespace {

Field random_field(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Field f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = normal(rng);
  return f;
}

double rel_l2(const SpectralData& spec, const Field& a, const Field& b) {
  return std::sqrt(spec.measure.dot((a - b).cwiseAbs2()) / spec.measure.dot(b.cwiseAbs2()));
}

const SpectralData& torus8() {
  static const DirichletSpace s = generate("torus_grid", {{"d", 2}, {"n", 8}});
  static const SpectralData spec = decompose(s);
  return spec;
}

}  // namespace

TEST(Calculus, TwoPointSpectrum) {
  const DirichletSpace s({1.0, 1.0}, {{0, 1, 1.0, 1.0}}, 1.0);
  const SpectralData spec = decompose(s);
  EXPECT_EQ(spec.eigenvalues[0], 0.0);
  EXPECT_NEAR(spec.eigenvalues[1], 2.0, 1e-14);
  const Eigen::MatrixXd K = heat_kernel(spec, 0.7);
  EXPECT_NEAR(K(0, 1), (1.0 - std::exp(-1.4)) / 2.0, 1e-14);
}

TEST(Calculus, RingOfFourSpectrum) {
  const auto s = generate("torus_grid", {{"d", 1}, {"n", 4}});
  const SpectralData spec = decompose(s);
  const double expected[] = {0.0, 32.0, 32.0, 64.0};  // {0,2,2,4} / h^2
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(spec.eigenvalues[i], expected[i], 1e-12);
  EXPECT_LT(spec.orthogonality_error, 1e-12);
}

TEST(Calculus, HeatSemigroupStructure) {
  const auto& spec = torus8();
  const Field one = Field::Ones(static_cast<Eigen::Index>(spec.size()));
  EXPECT_LT((heat(spec, 0.01, one) - one).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd K = heat_kernel(spec, 0.003);
  EXPECT_LT((K - K.transpose()).cwiseAbs().maxCoeff(), 1e-12 * K.cwiseAbs().maxCoeff());
  EXPECT_GT(K.minCoeff(), -1e-10);
  const Field f = random_field(spec.size(), 1);
  EXPECT_LT(rel_l2(spec, heat(spec, 0.002, heat(spec, 0.003, f)), heat(spec, 0.005, f)), 1e-12);
}

TEST(Calculus, FractionalPowerOneIsGenerator) {
  const auto s = generate("torus_grid", {{"d", 2}, {"n", 8}});
  const auto& spec = torus8();
  const Field f = random_field(spec.size(), 2);
  EXPECT_LT(rel_l2(spec, fractional_power(spec, 1.0, f), apply_generator(s, f)), 1e-11);
  const Field half = fractional_power(spec, 0.5, f);
  EXPECT_NEAR(spec.measure.dot(half.cwiseAbs2()), energy(s, f, f), 1e-10 * energy(s, f, f));
}

TEST(Calculus, SobolevNormOfEigenfield) {
  const auto& spec = torus8();
  const Field e = spec.eigenfields.col(5);
  for (double p : {1.5, 3.0}) {
    const double expected = std::pow(spec.eigenvalues[5], 0.2) * lp_norm(e, spec.measure, p);
    EXPECT_NEAR(sobolev_norm(spec, e, 0.4, p), expected, 1e-10 * expected);
  }
}

TEST(Calculus, CalderonClosedFormReproducesMeanFreePart) {
  const auto& spec = torus8();
  const Field f = random_field(spec.size(), 3);
  const Field target = f - spec.project_nullspace(f);
  for (double N : {1.0, 2.0, 3.5}) {
    EXPECT_LT(rel_l2(spec, calderon_reconstruct(spec, N, f, 0.0, kInfinity), target), 1e-12) << N;
  }
}

TEST(Calculus, CalderonQuadratureMatchesClosedForm) {
  const auto& spec = torus8();
  const Field f = random_field(spec.size(), 4);
  for (double N : {1.0, 2.0}) {
    const ScaleGrid g = ScaleGrid::for_spectrum(spec, 32, N);
    const Field quad = scale_integrate(g, [&](double t) { return q_op(spec, t, N, f); });
    const Field exact = calderon_reconstruct(spec, N, f, g.t_min, g.t_max);
    EXPECT_LT(rel_l2(spec, quad, exact), 1e-7) << N;
  }
}

TEST(Calculus, ApproximationOperatorSign) {
  const auto& spec = torus8();
  const Field f = random_field(spec.size(), 5);
  const double t = 0.01;
  for (double N : {1.0, 2.0, 3.5}) {
    const Field P = p_op(spec, t, N, f);
    EXPECT_LT(rel_l2(spec, p_from_integral(spec, t, N, f, IntegralSign::corrected), P), 1e-12);
    EXPECT_GT(rel_l2(spec, p_from_integral(spec, t, N, f, IntegralSign::as_printed), P), 0.1);
  }
  EXPECT_DOUBLE_EQ(sign_factor(IntegralSign::corrected), -1.0);
}

TEST(Calculus, FirstOrderOperatorsMatchHeat) {
  const auto& spec = torus8();
  const Field f = random_field(spec.size(), 6);
  const double t = 0.004;
  // P_t^(1) = e^{-tL}, Q_t^(1) = tL e^{-tL}
  EXPECT_LT(rel_l2(spec, p_op(spec, t, 1.0, f), heat(spec, t, f)), 1e-12);
  const Field q = t * fractional_power(spec, 1.0, heat(spec, t, f));
  EXPECT_LT(rel_l2(spec, q_op(spec, t, 1.0, f), q), 1e-12);
}

TEST(Calculus, OrthoConstant) {
  const auto& spec = torus8();
  const Field f = random_field(spec.size(), 7);
  const Eigen::VectorXd c = spec.coefficients(f);
  for (double N : {1.0, 2.0}) {
    const ScaleGrid g = ScaleGrid::for_spectrum(spec, 32, N);
    const double cN = std::exp(std::lgamma(2.0 * N) - N * std::log(4.0) - 2.0 * std::lgamma(N));
    double lhs = 0.0, rhs = 0.0;
    for (Eigen::Index i = 1; i < c.size(); ++i) {
      const double lam = spec.eigenvalues[i];
      double s = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) s += g.weights[j] * std::pow(q_symbol(g.nodes[j] * lam, N), 2);
      // closed-form tails outside [t_min, t_max]
      s += cN * ((1.0 - gamma_q(2.0 * N, 2.0 * g.t_min * lam)) + gamma_q(2.0 * N, 2.0 * g.t_max * lam));
      lhs += s * c[i] * c[i];
      rhs += c[i] * c[i];
    }
    EXPECT_NEAR(lhs / rhs, cN, 1e-9) << N;
  }
}

TEST(Calculus, ScaleGridWeightsIntegrateLog) {
  const ScaleGrid g = ScaleGrid::geometric(1e-4, 10.0, 16);
  double s = 0.0;
  for (double w : g.weights) s += w;
  EXPECT_NEAR(s, std::log(1e5), 1e-12);
  EXPECT_EQ(g.size(), 81u);
  EXPECT_THROW(ScaleGrid::geometric(1.0, 0.5, 16), ValidationError);
}

TEST(Calculus, SpectralCacheRoundTrip) {
  const auto s = generate("torus_grid", {{"d", 2}, {"n", 5}});
  const std::string dir = std::string(DIRCALC_TEST_TMP) + "/cache";
  std::filesystem::remove_all(dir);
  const SpectralData a = decompose_cached(s, dir);
  ASSERT_TRUE(std::filesystem::exists(cache_path(dir, s)));
  const auto b = load_spectrum(s, cache_path(dir, s));
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ((a.eigenvalues - b->eigenvalues).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((a.eigenfields - b->eigenfields).cwiseAbs().maxCoeff(), 0.0);
  const auto other = generate("torus_grid", {{"d", 2}, {"n", 6}});
  EXPECT_FALSE(load_spectrum(other, cache_path(dir, s)).has_value());
}
