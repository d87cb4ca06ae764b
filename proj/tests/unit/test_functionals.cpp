#include <gtest/gtest.h>

#include <cmath>

#include "dircalc/errors.hpp"
#include "dircalc/functionals.hpp"

using namespace dircalc;

namespace {

struct Fixture {
  DirichletSpace space = generate("torus_grid", {{"d", 2}, {"n", 8}});
  SpectralData spec = decompose(space);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST(Functionals, MaximalOfConstantAndSup) {
  const auto& s = fx().space;
  const Field c = Field::Constant(static_cast<Eigen::Index>(s.size()), 3.0);
  EXPECT_LT((maximal(s, c, 2.0) - c).cwiseAbs().maxCoeff(), 1e-12);
  Field d = Field::Zero(static_cast<Eigen::Index>(s.size()));
  d[5] = -2.0;
  const Field m = maximal(s, d, kInfinity);
  EXPECT_DOUBLE_EQ(m.minCoeff(), 2.0);
  // uncentered averages never exceed the sup
  EXPECT_LE(maximal(s, d, 1.0).maxCoeff(), 2.0 + 1e-12);
  EXPECT_GE(maximal(s, d, 1.0)[5], 2.0 - 1e-12);
}

TEST(Functionals, HorizontalSquareOfEigenfield) {
  const auto& spec = fx().spec;
  for (double N : {1.0, 2.0}) {
    const double cN = std::exp(std::lgamma(2.0 * N) - N * std::log(4.0) - 2.0 * std::lgamma(N));
    const Field e = spec.eigenfields.col(3);
    const Field g = horizontal_square(spec, N, e);
    EXPECT_LT((g - std::sqrt(cN) * e.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-12) << N;
  }
}

TEST(Functionals, SquareFunctionsVanishOnConstants) {
  const auto& [space, spec] = fx();
  const Field one = Field::Ones(static_cast<Eigen::Index>(space.size()));
  const ScaleGrid g = ScaleGrid::for_spectrum(spec, 8, 2.0);
  EXPECT_LT(horizontal_square(spec, 2.0, one).maxCoeff(), 1e-12);
  EXPECT_LT(vertical_square(space, spec, g, 2.0, one, VerticalVariant::G).maxCoeff(), 1e-10);
  EXPECT_LT(vertical_square(space, spec, g, 2.0, one, VerticalVariant::G_tilde).maxCoeff(), 1e-10);
  EXPECT_LT(conical_square(space, spec, g, 2.0, one).maxCoeff(), 1e-10);
  EXPECT_LT(s_alpha(space, one, 0.5, 1.5).maxCoeff(), 1e-12);
}

TEST(Functionals, VerticalTildeL2Constant) {
  const auto& [space, spec] = fx();
  const ScaleGrid g = ScaleGrid::for_spectrum(spec, 32, 1.0);
  const Field e = spec.eigenfields.col(7);
  const Field v = vertical_square(space, spec, g, 1.0, e, VerticalVariant::G_tilde);
  // ||G~_N f||_2^2 = Gamma(2N+1) / (2^{2N+1} Gamma(N)^2) ||f||_2^2 for an eigenfield
  EXPECT_NEAR(space.measure().dot(v.cwiseAbs2()) / space.measure().dot(e.cwiseAbs2()), 0.25, 1e-6);
}

TEST(Functionals, OscillationAndSAlphaScaling) {
  const auto& s = fx().space;
  Field f(static_cast<Eigen::Index>(s.size()));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = std::cos(0.4 * i);
  const Ball b = ball(s, 0, 0.25);
  EXPECT_NEAR(oscillation(s, b, 2.0 * f, 2.0), 2.0 * oscillation(s, b, f, 2.0), 1e-12);
  EXPECT_NEAR(oscillation(s, b, f.array() + 5.0, 1.5), oscillation(s, b, f, 1.5), 1e-12);
  const Field a = s_alpha(s, f, 0.5, 1.5), b2 = s_alpha(s, 3.0 * f, 0.5, 1.5);
  EXPECT_LT((b2 - 3.0 * a).cwiseAbs().maxCoeff(), 1e-10 * a.maxCoeff());
}

TEST(Functionals, CarlesonAndNontangential) {
  const auto& [space, spec] = fx();
  const ScaleGrid g = ScaleGrid::for_spectrum(spec, 8, 2.0);
  const Field e = spec.eigenfields.col(2);
  const TimeField F = q_slices(spec, g, 2.0, e);
  const Field n = nontangential_max(space, F);
  EXPECT_GE(n.minCoeff(), 0.0);
  EXPECT_GE(n.maxCoeff(), F.slices.cwiseAbs().maxCoeff() - 1e-12);
  EXPECT_GT(carleson(space, F, 2.0), 0.0);
  const TimeField zero{g, Eigen::MatrixXd::Zero(F.slices.rows(), F.slices.cols())};
  EXPECT_EQ(carleson(space, zero, 2.0), 0.0);
  EXPECT_TRUE(std::isfinite(carleson_duality_ratio(space, F, F, 2.0, 0.1)));
}

TEST(Functionals, FeffermanSteinRange) {
  const auto& [space, spec] = fx();
  const ScaleGrid g = ScaleGrid::for_spectrum(spec, 8, 2.0);
  const std::vector<TimeField> ens{q_slices(spec, g, 2.0, spec.eigenfields.col(4))};
  const RatioSummary r = fefferman_stein_check(space, ens, 3.0, 1.5);
  EXPECT_TRUE(std::isfinite(r.max));
  EXPECT_GE(r.max, 1.0 - 1e-12);  // M_q dominates |F|
  EXPECT_THROW(fefferman_stein_check(space, ens, 3.0, 2.0), ValidationError);
}

TEST(Functionals, Summaries) {
  const RatioSummary s = summarize({3.0, 1.0, 2.0, 4.0});
  EXPECT_DOUBLE_EQ(s.max, 4.0);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
}
