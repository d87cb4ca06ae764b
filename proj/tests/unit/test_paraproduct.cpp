#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dircalc/errors.hpp"
#include "dircalc/nonlinearity.hpp"
#include "dircalc/paraproduct.hpp"

using namespace dircalc;

namespace {

struct Fixture {
  DirichletSpace space = generate("torus_grid", {{"d", 2}, {"n", 6}});
  SpectralData spec = decompose(space);
  ParaproductConfig cfg = make_config(spec, 2.0, 0.5, 32);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

Field bounded(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

}  // namespace

TEST(Paraproduct, DefaultOrder) {
  EXPECT_EQ(default_order(2.0), 12);
  EXPECT_EQ(default_order(1.0), 8);
  EXPECT_EQ(fx().cfg.order, 12.0);
  EXPECT_THROW(make_config(fx().spec, 2.0, 1.0), ValidationError);
}

TEST(Paraproduct, ConstantSymbol) {
  const auto& [space, spec, cfg] = fx();
  const Field f = bounded(space.size(), 1);
  const Field g = Field::Constant(static_cast<Eigen::Index>(space.size()), 0.7);
  const Field expected = 0.7 * (f - spec.project_nullspace(f));
  EXPECT_LT((paraproduct(spec, cfg, g, f) - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Paraproduct, SplitSumsToWhole) {
  const auto& [space, spec, cfg] = fx();
  const Field f = bounded(space.size(), 2), g = bounded(space.size(), 3);
  const SplitParaproduct s = paraproduct_split(spec, cfg, g, f);
  const Field whole = paraproduct(spec, cfg, g, f);
  EXPECT_LT((s.first + s.second - whole).cwiseAbs().maxCoeff(), 1e-9 * whole.cwiseAbs().maxCoeff());
}

TEST(Paraproduct, ProductDecomposition) {
  const auto& [space, spec, cfg] = fx();
  for (unsigned k = 0; k < 3; ++k) {
    const Field f = bounded(space.size(), 10 + k), g = bounded(space.size(), 20 + k);
    EXPECT_LT(product_decomposition_residual(spec, cfg, f, g), 1e-5 * f.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff());
  }
}

TEST(Paraproduct, KernelDoubleIntegralAgreesWithDirect) {
  const auto& [space, spec, cfg] = fx();
  const Field g = bounded(space.size(), 4), h = bounded(space.size(), 5);
  const KernelIntegral k = kernel_double_integral(spec, cfg, g, h);
  EXPECT_LT(k.relative_error, 1e-5);  // fourth order in the grid step
}

TEST(Paraproduct, ChainReconstruction) {
  const auto& [space, spec, cfg] = fx();
  const Field f = 0.8 * bounded(space.size(), 6);
  for (const char* name : {"identity", "square", "sin"}) {
    EXPECT_LT(chain_transform(spec, cfg, nonlinearity(name), f).residual, 1e-4) << name;
  }
  // identity reduces to the reproducing formula
  const ChainResult id = chain_transform(spec, cfg, nonlinearity("identity"), f);
  EXPECT_LT((id.transform - (f - spec.project_nullspace(f))).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_GT(chain_transform(spec, cfg, nonlinearity("sin"), f, IntegralSign::as_printed).residual, 1e-2);
}

TEST(Paraproduct, ParalinearizationAlternateFormula) {
  const auto& [space, spec, cfg] = fx();
  const Field f = 0.8 * bounded(space.size(), 7);
  const Paralinearization p = paralinearization_remainder(spec, cfg, nonlinearity("tanh"), f);
  EXPECT_LT(p.discrepancy, 1e-4);
  // linear F leaves only the nullspace part
  const Paralinearization q = paralinearization_remainder(spec, cfg, nonlinearity("identity"), f);
  EXPECT_LT((q.remainder - spec.project_nullspace(f)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Nonlinearities, Registry) {
  EXPECT_EQ(nonlinearity_names().size(), 5u);
  const auto& sp = nonlinearity("softplus_shifted");
  EXPECT_NEAR(sp.value(0.0), 0.0, 1e-15);
  EXPECT_NEAR(sp.derivative(0.0), 0.5, 1e-15);
  EXPECT_THROW(nonlinearity("cube"), ValidationError);
}
