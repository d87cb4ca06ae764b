// Acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dircalc/calculus.hpp"
#include "dircalc/ensemble.hpp"
#include "dircalc/errors.hpp"
#include "dircalc/nonlinearity.hpp"
#include "dircalc/paraproduct.hpp"
#include "dircalc/probes.hpp"
#include "dircalc/special.hpp"
#include "dircalc/suites.hpp"

using namespace dircalc;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Field normal_field(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Field f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = normal(rng);
  return f;
}

Field bounded_field(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

double rel_l2(const Eigen::VectorXd& mu, const Field& a, const Field& b) {
  return std::sqrt(mu.dot((a - b).cwiseAbs2()) / mu.dot(b.cwiseAbs2()));
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[192];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const DirichletSpace& torus2(int n) {
  static std::map<int, DirichletSpace> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, generate("torus_grid", {{"d", 2}, {"n", n}})).first;
  return it->second;
}

const SpectralData& spectrum(int n) {
  static std::map<int, SpectralData> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, decompose(torus2(n))).first;
  return it->second;
}

std::vector<DirichletSpace> zoo() {
  return {generate("torus_grid", {{"d", 1}, {"n", 16}}), generate("torus_grid", {{"d", 2}, {"n", 8}}),
          generate("box_grid", {{"d", 2}, {"n", 8}}),    generate("path", {{"n", 16}}),
          generate("dumbbell", {{"n", 6}}),               generate("binary_tree", {{"depth", 5}}),
          generate("sierpinski", {{"level", 3}})};
}

// 1. Reproducing formula, closed form and 32 ppd quadrature with closed-form tails.
Outcome calderon() {
  const auto& spec = spectrum(16);
  std::mt19937_64 rng(1);
  double closed = 0.0, quad = 0.0;
  std::vector<Field> fields;
  for (int k = 0; k < 50; ++k) fields.push_back(normal_field(spec.size(), rng));
  for (double N : {1.0, 2.0, 3.5}) {
    const ScaleGrid g = ScaleGrid::for_spectrum(spec, 32, N);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.size()));
    for (Eigen::Index i = 1; i < m.size(); ++i) {
      const double lam = spec.eigenvalues[i];
      for (std::size_t j = 0; j < g.size(); ++j) m[i] += g.weights[j] * q_symbol(g.nodes[j] * lam, N);
      m[i] += (1.0 - p_symbol(g.t_min * lam, N)) + p_symbol(g.t_max * lam, N);
    }
    for (const Field& f : fields) {
      const Field target = f - spec.project_nullspace(f);
      closed = std::max(closed, std::sqrt(spec.measure.dot((calderon_reconstruct(spec, N, f, 0.0, kInfinity) - target).cwiseAbs2()) /
                                          spec.measure.dot(f.cwiseAbs2())));
      quad = std::max(quad, std::sqrt(spec.measure.dot((spec.apply(m, f) - target).cwiseAbs2()) /
                                      spec.measure.dot(f.cwiseAbs2())));
    }
  }
  return {closed <= 1e-10 && quad <= 1e-6, fmt("closed-form %.2e (<=1e-10), quadrature %.2e (<=1e-6)", closed, quad)};
}

// 2. P_t = Id - int_0^t Q_s ds/s; the "+" variant is off by O(1).
Outcome sign_resolution() {
  const auto& spec = spectrum(16);
  std::mt19937_64 rng(2);
  double corrected = 0.0, printed = kInfinity;
  for (double N : {1.0, 2.0, 3.5}) {
    for (double t : {0.1 / spec.lambda_min(), 1.0 / spec.lambda_min()}) {
      const Field f = normal_field(spec.size(), rng);
      const Field P = p_op(spec, t, N, f);
      corrected = std::max(corrected, rel_l2(spec.measure, p_from_integral(spec, t, N, f, IntegralSign::corrected), P));
      printed = std::min(printed, rel_l2(spec.measure, p_from_integral(spec, t, N, f, IntegralSign::as_printed), P));
    }
  }
  return {corrected <= 1e-10 && printed >= 0.1,
          fmt("Id - int: %.2e (<=1e-10); Id + int: min error %.2f (O(1))", corrected, printed)};
}

// 3. Conservation, symmetry, positivity, semigroup on every generated family.
Outcome heat_structure() {
  double cons = 0.0, sym = 0.0, neg = 0.0, semi = 0.0;
  for (const DirichletSpace& s : zoo()) {
    const SpectralData spec = decompose(s);
    const Field one = Field::Ones(static_cast<Eigen::Index>(s.size()));
    for (double c : {0.1, 1.0}) {
      const double t = c / spec.lambda_min();
      cons = std::max(cons, (heat(spec, t, one) - one).cwiseAbs().maxCoeff());
      const Eigen::MatrixXd K = heat_kernel(spec, t);
      const double scale = K.cwiseAbs().maxCoeff();
      sym = std::max(sym, (K - K.transpose()).cwiseAbs().maxCoeff() / scale);
      neg = std::max(neg, -K.minCoeff());
      const Eigen::MatrixXd K2 = heat_kernel(spec, 2.0 * t);
      semi = std::max(semi, (K * spec.measure.asDiagonal() * K - K2).cwiseAbs().maxCoeff() / K2.cwiseAbs().maxCoeff());
    }
  }
  const bool ok = cons <= 1e-10 && sym <= 1e-10 && neg <= 1e-10 && semi <= 1e-9;
  char buf[256];
  std::snprintf(buf, sizeof buf, "7 families: |e^{-tL}1-1| %.1e, asym %.1e, min p_t %.1e, semigroup %.1e", cons, sym,
                -neg, semi);
  return {ok, buf};
}

// 4. int ||Q_t f||^2 dt/t / ||f - Pf||^2 = Gamma(2N) / (4^N Gamma(N)^2).
Outcome ortho() {
  const auto& spec = spectrum(16);
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (double N : {1.0, 2.0}) {
    const double cN = std::exp(std::lgamma(2.0 * N) - N * std::log(4.0) - 2.0 * std::lgamma(N));
    const ScaleGrid g = ScaleGrid::for_spectrum(spec, 32, N);
    for (int k = 0; k < 20; ++k) {
      const Field f = normal_field(spec.size(), rng);
      const Eigen::MatrixXd S = spectral_slices(spec, g, spec.coefficients(f), [N](double x) { return q_symbol(x, N); });
      double lhs = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) lhs += g.weights[j] * spec.measure.dot(S.col(static_cast<Eigen::Index>(j)).cwiseAbs2());
      const Eigen::VectorXd c = spec.coefficients(f);
      double tails = 0.0, mass = 0.0;
      for (Eigen::Index i = 1; i < c.size(); ++i) {
        const double lam = spec.eigenvalues[i];
        tails += c[i] * c[i] * cN * ((1.0 - gamma_q(2.0 * N, 2.0 * g.t_min * lam)) + gamma_q(2.0 * N, 2.0 * g.t_max * lam));
        mass += c[i] * c[i];
      }
      worst = std::max(worst, std::abs((lhs + tails) / mass - cN));
    }
  }
  return {worst <= 1e-8, fmt("max |ratio - c_N| %.2e (<=1e-8)", worst)};
}

// 5. Product decomposition on torus 12x12 with the default order.
Outcome decomposition() {
  SuiteConfig cfg;
  cfg.suite = "decomposition";
  cfg.samples = 50;
  cfg.nu = 2.0;
  cfg.refine = false;
  cfg.order_ppd = {2, 4};
  const SuiteReport r = run_suite({torus2(12)}, cfg);
  const json& s = r.cells[0].summary;
  const double worst = s["max"], order = s["residual_order"];
  return {worst <= 1e-5 && order >= 1.8,
          fmt("D=%g, max residual %.2e (<=1e-5), order in ppd %.2f (>=1.8)", s["order"].get<double>(), worst, order)};
}

// 6. Split identity and constant symbol.
Outcome split() {
  const auto& spec = spectrum(12);
  const ParaproductConfig cfg = make_config(spec, 2.0, 0.5, 32);
  std::mt19937_64 rng(6);
  double s = 0.0, c = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Field f = bounded_field(spec.size(), rng), g = bounded_field(spec.size(), rng);
    const SplitParaproduct sp = paraproduct_split(spec, cfg, g, f);
    const Field whole = paraproduct(spec, cfg, g, f);
    s = std::max(s, (sp.first + sp.second - whole).cwiseAbs().maxCoeff() / whole.cwiseAbs().maxCoeff());
    const double k0 = 0.3 + 0.1 * k;
    const Field cg = Field::Constant(f.size(), k0);
    c = std::max(c, (paraproduct(spec, cfg, cg, f) - k0 * (f - spec.project_nullspace(f))).cwiseAbs().maxCoeff());
  }
  return {s <= 1e-9 && c <= 1e-6, fmt("split %.2e (<=1e-9), constant g %.2e (<=1e-6)", s, c)};
}

// 7. (G_2) closed form on every family.
Outcome g2() {
  double worst = 0.0;
  const double target = 1.0 / std::sqrt(2.0 * std::exp(1.0));
  for (const DirichletSpace& s : zoo()) {
    const SpectralData spec = decompose(s);
    worst = std::max(worst, std::abs(gradient_bound_probe(s, spec, 2.0, {}, 0).fit.constant - target));
  }
  return {worst <= 1e-9, fmt("max |C - (2e)^{-1/2}| %.2e (<=1e-9)", worst)};
}

// 8. Riesz identities at p = 2.
Outcome riesz2() {
  double worst = 0.0;
  for (const DirichletSpace& s : zoo()) {
    const SpectralData spec = decompose(s);
    const ProbeReport r = riesz_probe(s, spec, 2.0, EnsembleSpec{}, "Rp");
    worst = std::max({worst, std::abs(r.diagnostics["riesz"].get<double>() - 1.0),
                      std::abs(r.diagnostics["reverse_riesz"].get<double>() - 1.0)});
  }
  return {worst <= 1e-9, fmt("max |C - 1| over R_2, RR_2: %.2e (<=1e-9)", worst)};
}

// 9. Davies-Gaffney on torus 32x32.
Outcome davies_gaffney() {
  const auto& space = torus2(32);
  const auto& spec = spectrum(32);
  OffDiagonalOptions opt;
  opt.family = OperatorFamily::heat;
  opt.exponential = true;
  const ProbeReport r = offdiagonal_probe(space, spec, opt);
  return {r.fit.exponent > 0.0 && r.fit.r_squared >= 0.9,
          fmt("rate c %.3f (>0), R^2 %.3f (>=0.9), %g distances", r.fit.exponent, r.fit.r_squared,
              static_cast<double>(r.points.size()))};
}

// 10. Kernel scale exponent on torus 16x16, alpha = 0.5.
Outcome kernel_decay() {
  const auto& spec = spectrum(16);
  const ParaproductConfig cfg = make_config(spec, 2.0, 0.5, 32);
  std::mt19937_64 rng(10);
  const Field g = bounded_field(spec.size(), rng);
  const ProbeReport r = kernel_decay_probe(spec, cfg, g, {}, 7);
  const double e = r.fit.exponent;
  return {e >= 0.15 && e <= 0.35, fmt("median s/t exponent %.3f, window [0.15, 0.35], theory %.2f", e, 0.25)};
}

// 11. Chain-rule reconstruction.
Outcome chain() {
  const auto& spec = spectrum(16);
  const ParaproductConfig cfg = make_config(spec, 2.0, 0.5, 32);
  std::mt19937_64 rng(11);
  double worst = 0.0, identity = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Field f = bounded_field(spec.size(), rng);
    for (const char* name : {"identity", "square", "sin"}) {
      const ChainResult c = chain_transform(spec, cfg, nonlinearity(name), f);
      worst = std::max(worst, c.residual);
      if (std::string(name) == "identity") {
        identity = std::max(identity, std::sqrt(spec.measure.dot((c.transform - (f - spec.project_nullspace(f))).cwiseAbs2()) /
                                                spec.measure.dot(f.cwiseAbs2())));
      }
    }
  }
  return {worst <= 1e-4 && identity <= 1e-6,
          fmt("max residual %.2e (<=1e-4); identity vs reproducing formula %.2e (<=1e-6)", worst, identity)};
}

// 12. Algebra suite at the energy limit alpha = 1, p = 2.
Outcome algebra_limit() {
  SuiteConfig cfg;
  cfg.suite = "algebra";
  cfg.alpha = 1.0;
  cfg.p = 2.0;
  cfg.samples = 50;
  const SuiteReport r = run_suite({torus2(16)}, cfg);
  double worst = 0.0;
  for (const auto& c : r.cells) worst = std::max(worst, c.summary["max"].get<double>());
  cfg.alpha = 0.99;
  const SuiteReport near = run_suite({torus2(16)}, cfg);
  double near_worst = 0.0;
  for (const auto& c : near.cells) near_worst = std::max(near_worst, c.summary["max"].get<double>());
  return {worst <= 1.1, fmt("alpha=1 max ratio %.4f (<= 1 + 10%%); alpha=0.99 max %.4f", worst, near_worst)};
}

// 13. Equivalence bracket on the 1-D torus.
Outcome equivalence() {
  SuiteConfig cfg;
  cfg.suite = "equivalence";
  cfg.alpha = 0.4;
  cfg.p = 3.0;
  cfg.rho = 1.5;
  cfg.samples = 200;
  cfg.refine = false;
  std::vector<DirichletSpace> spaces;
  for (int n : {32, 64, 128}) spaces.push_back(generate("torus_grid", {{"d", 1}, {"n", n}}));
  const SuiteReport r = run_suite(spaces, cfg);
  double width = 0.0;
  for (const auto& c : r.cells) width = std::max(width, c.summary["bracket_width"].get<double>());
  const double lo = r.refinement["lower"]["spread"], hi = r.refinement["upper"]["spread"];
  return {width <= 50.0 && lo <= 2.0 && hi <= 2.0,
          fmt("max C/c %.2f (<=50); endpoint drift c x%.3f, C x%.3f (<=2)", width, lo, hi)};
}

// 14. Holder exponents for (2,2) and (inf,inf) agree.
Outcome holder_consistency() {
  const auto& space = torus2(32);
  const auto& spec = spectrum(32);
  const ProbeReport a = holder_probe(space, spec, 2.0, 2.0, {}, {}, HolderVariant::H, {});
  const ProbeReport b = holder_probe(space, spec, kInfinity, kInfinity, {}, {}, HolderVariant::H, {});
  // same fit without the smallest radius, where the ball is the nearest-neighbour stencil
  auto coarse = [](const ProbeReport& r) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i + 1 < r.points.size(); ++i) {
      x.push_back(r.points[i].first);
      y.push_back(r.points[i].second);
    }
    return fit_line(x, y).slope;
  };
  const double gap = std::abs(a.fit.exponent - b.fit.exponent);
  char buf[256];
  std::snprintf(buf, sizeof buf, "eta(2,2) %.3f, eta(inf,inf) %.3f, gap %.3f (<=0.15); gap without r = mesh %.3f", a.fit.exponent,
                b.fit.exponent, gap, std::abs(coarse(a) - coarse(b)));
  return {gap <= 0.15, buf};
}

// 15. Dumbbell Poincare constant grows with block size; torus stays put.
Outcome degradation() {
  const std::vector<int> sizes{16, 24, 32};  // smallest radius stays above the nearest-neighbour stencil
  std::vector<double> dumb, tor, lx, ly;
  for (int n : sizes) {
    const DirichletSpace d = generate("dumbbell", {{"n", n}});
    const double diam = d.metric().diameter();
    const Vertex neck = d.size() - 1;
    const Vertex centre = static_cast<Vertex>(n / 2) * static_cast<Vertex>(n + 1);
    const std::vector<double> radii{diam / 8.0, diam / 4.0, diam / 2.0, diam};
    dumb.push_back(poincare_probe(d, 2.0, radii, {neck, centre}).fit.constant);
    const DirichletSpace& t = torus2(n);
    const double td = t.metric().diameter();
    tor.push_back(poincare_probe(t, 2.0, {td / 8.0, td / 4.0, td / 2.0, td}, {0}).fit.constant);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(dumb.back()));
  }
  const double slope = fit_line(lx, ly).slope;
  const double spread = *std::max_element(tor.begin(), tor.end()) / *std::min_element(tor.begin(), tor.end());
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "dumbbell C = %.3f, %.3f, %.3f (growth exponent %.2f, need >=1); torus C = %.3f, %.3f, %.3f (spread x%.3f, <=1.5)",
                dumb[0], dumb[1], dumb[2], slope, tor[0], tor[1], tor[2], spread);
  return {slope >= 1.0 && spread <= 1.5, buf};
}

// 16. Byte-identical suite JSON across repeated runs.
Outcome determinism() {
  bool same = true;
  std::string names;
  for (const std::string& suite : suite_names()) {
    SuiteConfig cfg;
    cfg.suite = suite;
    cfg.samples = 6;
    cfg.seed = 1234;
    cfg.alpha = 0.4;
    cfg.p = 3.0;
    cfg.rho = 1.5;
    const std::vector<DirichletSpace> spaces{torus2(8)};
    const std::string a = to_json(run_suite(spaces, cfg)).dump();
    const std::string b = to_json(run_suite(spaces, cfg)).dump();
    if (a != b) {
      same = false;
      names += " " + suite;
    }
  }
  return {same, same ? "algebra, equivalence, chain, paralin, decomposition identical" : "differs:" + names};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double limit;  // seconds, 0 for none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, 10, calderon},        {2, 1, sign_resolution},  {3, 5, heat_structure},    {4, 2, ortho},
      {5, 120, decomposition},  {6, 0, split},            {7, 1, g2},                {8, 1, riesz2},
      {9, 60, davies_gaffney},  {10, 120, kernel_decay},  {11, 0, chain},            {12, 60, algebra_limit},
      {13, 300, equivalence},   {14, 120, holder_consistency}, {15, 180, degradation}, {16, 0, determinism}};
  // Shared spectra are built once up front so per-criterion timings measure the criterion itself.
  for (int n : {12, 16, 32}) spectrum(n);
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit <= 0.0 || secs <= c.limit;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d: %s  %s  [%.2fs%s]\n", c.id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                in_time ? "" : fmt(" > %.0fs limit", c.limit).c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
