#include <gtest/gtest.h>

#include <cmath>

#include "dircalc/errors.hpp"
#include "dircalc/probes.hpp"

using namespace dircalc;
using nlohmann::json;

namespace {

struct Fixture {
  DirichletSpace space = generate("torus_grid", {{"d", 2}, {"n", 12}});
  SpectralData spec = decompose(space);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST(Probes, TwoPointHeatKernelTable) {
  const DirichletSpace s({1.0, 1.0}, {{0, 1, 1.0, 1.0}}, 1.0);
  const SpectralData spec = decompose(s);
  const ProbeReport r = due_ue_probe(s, spec, {1.0}, "DUE");
  bool found = false;
  for (const auto& row : r.diagnostics["kernel_table"]) {
    if (row[1] == 0 && row[2] == 1) {
      EXPECT_NEAR(row[4].get<double>(), (1.0 - std::exp(-2.0)) / 2.0, 1e-14);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  EXPECT_THROW(due_ue_probe(s, spec, {4.0}, "DUE"), ValidationError);
}

TEST(Probes, GradientBoundL2ClosedForm) {
  const auto& [space, spec] = fx();
  const ProbeReport r = gradient_bound_probe(space, spec, 2.0, {}, 0);
  EXPECT_NEAR(r.fit.constant, 1.0 / std::sqrt(2.0 * std::exp(1.0)), 1e-9);
}

TEST(Probes, GradientBoundInfinityBracket) {
  const auto& [space, spec] = fx();
  const ProbeReport r = gradient_bound_probe(space, spec, kInfinity, {0.001, 0.01}, 0);
  const double lo = r.diagnostics["lower"], hi = r.diagnostics["upper"];
  EXPECT_GT(lo, 0.0);
  EXPECT_LE(lo, hi * (1.0 + 1e-12));
  const ProbeReport one = gradient_bound_probe(space, spec, 1.0, {0.001, 0.01}, 0);
  EXPECT_TRUE(one.diagnostics["exact"].get<bool>());
}

TEST(Probes, RieszAtTwoIsOne) {
  const auto& [space, spec] = fx();
  const ProbeReport r = riesz_probe(space, spec, 2.0, {}, "Rp");
  EXPECT_NEAR(r.diagnostics["riesz"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(r.diagnostics["reverse_riesz"].get<double>(), 1.0, 1e-9);
}

TEST(Probes, BallNeumannEigenvalue) {
  const auto path3 = generate("path", {{"n", 3}});
  EXPECT_NEAR(ball_neumann_eigenvalue(path3, {0, 1, 2}), 1.0, 1e-12);
  // large ball: block inverse iteration path
  const auto path = generate("path", {{"n", 500}});
  std::vector<Vertex> all(500);
  for (Vertex v = 0; v < 500; ++v) all[v] = v;
  EXPECT_NEAR(ball_neumann_eigenvalue(path, all), 2.0 - 2.0 * std::cos(M_PI / 500.0), 1e-12);
  EXPECT_THROW(ball_neumann_eigenvalue(path, {3}), ValidationError);
}

TEST(Probes, PoincareTorusStable) {
  const auto& [space, spec] = fx();
  const ProbeReport r = poincare_probe(space, 2.0, {}, {0}, &spec);
  EXPECT_GT(r.fit.constant, 0.1);
  EXPECT_LT(r.fit.constant, 2.0);
}

TEST(Probes, HolderExactSupsPositive) {
  const auto& [space, spec] = fx();
  for (auto [p, q] : {std::pair{2.0, 2.0}, std::pair{kInfinity, kInfinity}, std::pair{1.0, 2.0}}) {
    const ProbeReport r = holder_probe(space, spec, p, q, {}, {0}, HolderVariant::H, {});
    EXPECT_TRUE(r.samples["exact"].get<bool>());
    EXPECT_GT(r.fit.exponent, 0.0);
  }
}

TEST(Probes, OffDiagonalHeatDecays) {
  const auto& [space, spec] = fx();
  OffDiagonalOptions opt;
  opt.family = OperatorFamily::heat;
  opt.t = std::pow(2.0 * space.mesh(), 2);
  opt.exponential = true;
  const ProbeReport r = offdiagonal_probe(space, spec, opt);
  EXPECT_GT(r.fit.exponent, 0.0);
  opt.family = OperatorFamily::grad_heat;
  EXPECT_GT(offdiagonal_probe(space, spec, opt).fit.exponent, 0.0);
  opt.p = 1.0;
  EXPECT_THROW(offdiagonal_probe(space, spec, opt), ValidationError);
}

TEST(Probes, AhlforsAndDoubling) {
  const auto& space = fx().space;
  const ProbeReport a = ahlfors_probe(space, {}, 2.0);
  EXPECT_GE(a.fit.constant, 1.0);
  EXPECT_GT(a.fit.exponent, 1.0);
  const ProbeReport d = doubling_probe(space, {});
  EXPECT_GT(d.fit.exponent, 1.0);
}

TEST(Probes, ImaginaryPowerIsometryAtTwo) {
  const ProbeReport r = imaginary_power_probe(fx().spec, 2.0, {1.0, 3.0}, 0);
  for (const auto& row : r.diagnostics["norms"]) EXPECT_NEAR(row["lower"].get<double>(), 1.0, 1e-10);
}

TEST(Probes, UnknownTagListsValidTags) {
  const auto& [space, spec] = fx();
  try {
    run_probe(space, spec, "Bogus", json::object(), 0);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("Hbar"), std::string::npos);
    EXPECT_NE(msg.find("Ahlfors"), std::string::npos);
  }
}

TEST(Probes, ReportSerialization) {
  const auto& [space, spec] = fx();
  const ProbeReport r = run_probe(space, spec, "Gp", {{"p", 2}}, 7);
  const json j = to_json(r);
  for (const char* k : {"tag", "params", "fit", "samples", "seed"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(points_csv(r).substr(0, 4), "x,y\n");
}
