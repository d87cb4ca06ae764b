#include <gtest/gtest.h>

#include <cmath>

#include "dircalc/errors.hpp"
#include "dircalc/space.hpp"

using namespace dircalc;
using nlohmann::json;

namespace {

DirichletSpace two_point() { return DirichletSpace({1.0, 1.0}, {{0, 1, 1.0, 1.0}}, 1.0); }

}  // namespace

TEST(Space, TwoPointGeneratorEnergyCarre) {
  const auto s = two_point();
  const Field f = (Field(2) << 1.0, -1.0).finished();
  const Field Lf = apply_generator(s, f);
  EXPECT_DOUBLE_EQ(Lf[0], 2.0);
  EXPECT_DOUBLE_EQ(Lf[1], -2.0);
  EXPECT_DOUBLE_EQ(energy(s, f, f), 4.0);
  const Field g = carre_du_champ(s, f, f);
  EXPECT_DOUBLE_EQ(g[0], 2.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);
}

TEST(Space, EnergyIsIntegratedCarreAndGeneratorPairing) {
  const auto s = generate("torus_grid", {{"d", 2}, {"n", 5}});
  Field f(s.size()), g(s.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    f[i] = std::sin(0.7 * i);
    g[i] = std::cos(1.3 * i);
  }
  const double e = energy(s, f, g);
  EXPECT_NEAR(e, s.measure().dot(carre_du_champ(s, f, g)), 1e-12 * std::abs(e));
  EXPECT_NEAR(e, inner(s, apply_generator(s, f), g), 1e-10 * std::abs(e));
}

TEST(Space, LeibnizDefectVanishesForConstants) {
  const auto s = generate("path", {{"n", 6}});
  const Field one = Field::Ones(6);
  Field f(6);
  for (int i = 0; i < 6; ++i) f[i] = i * i;
  EXPECT_NEAR(leibniz_defect(s, one, f, f), 0.0, 1e-12);
  EXPECT_GT(leibniz_defect(s, f, f, f), 0.0);
}

TEST(Space, PathMetricAndBalls) {
  const auto s = generate("path", {{"n", 5}});
  EXPECT_DOUBLE_EQ(distance(s, 0, 4), 4.0);
  const Ball b = ball(s, 2, 1.0);
  EXPECT_EQ(b.members.size(), 3u);
  EXPECT_DOUBLE_EQ(b.volume, 3.0);
  EXPECT_DOUBLE_EQ(volume(s, 0, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(s.metric().diameter(), 4.0);
}

TEST(Space, GridCalibration) {
  const auto s = generate("torus_grid", {{"d", 2}, {"n", 8}});
  EXPECT_EQ(s.size(), 64u);
  EXPECT_DOUBLE_EQ(s.mesh(), 0.125);
  EXPECT_NEAR(s.total_measure(), 1.0, 1e-14);
  for (const Edge& e : s.edges()) {
    EXPECT_DOUBLE_EQ(e.weight, 1.0);
    EXPECT_DOUBLE_EQ(e.length, 0.125);
  }
  EXPECT_EQ(s.edges().size(), 128u);
}

TEST(Space, SierpinskiNormalized) {
  for (int k = 1; k <= 3; ++k) {
    const auto s = generate("sierpinski", {{"level", k}});
    EXPECT_NEAR(s.total_measure(), 1.0, 1e-12) << "level " << k;
  }
  EXPECT_EQ(generate("sierpinski", {{"level", 1}}).size(), 6u);
}

TEST(Space, DoublingOnTorusNearTwo) {
  const auto s = generate("torus_grid", {{"d", 2}, {"n", 16}});
  const DoublingFit d = doubling_fit(s, {0.0625, 0.125, 0.25});
  EXPECT_GT(d.nu, 1.4);
  EXPECT_LT(d.nu, 2.5);
  EXPECT_GE(d.constant, 1.0);
}

TEST(Space, JsonRoundTripIsByteEqual) {
  const auto s = generate("dumbbell", {{"n", 4}});
  const std::string a = space_to_json(s).dump();
  const std::string b = space_to_json(space_from_json(json::parse(a))).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(space_from_json(json::parse(a)).hash(), s.hash());
}

TEST(Space, RejectsInvalidInput) {
  EXPECT_THROW(DirichletSpace({1.0, 1.0}, {{0, 0, 1.0, 1.0}}, 1.0), ValidationError);
  EXPECT_THROW(DirichletSpace({1.0, 1.0, 1.0}, {{0, 1, 1.0, 1.0}}, 1.0), ValidationError);
  EXPECT_THROW(DirichletSpace({1.0, -1.0}, {{0, 1, 1.0, 1.0}}, 1.0), ValidationError);
  EXPECT_THROW(generate("torus_grid", {{"d", 2}, {"n", 1}}), ValidationError);
  EXPECT_THROW(generate("moebius", json::object()), ValidationError);
  const json asym = json::parse(R"({"version":1,"h":1,"vertices":[{"id":0,"mu":1},{"id":1,"mu":1}],
    "edges":[{"u":0,"v":1,"w":1,"len":1},{"u":1,"v":0,"w":2,"len":1}]})");
  EXPECT_THROW(space_from_json(asym), ValidationError);
}
