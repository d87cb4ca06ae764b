#include "dircalc/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "dircalc/errors.hpp"
#include "dircalc/functionals.hpp"
#include "dircalc/nonlinearity.hpp"
#include "dircalc/numerics.hpp"
#include "dircalc/paraproduct.hpp"
#include "dircalc/probes.hpp"
#include "dircalc/spectral_cache.hpp"

namespace dircalc {

using nlohmann::json;

namespace {

json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

double read_number(const json& v, const char* key) {
  if (v.is_string() && (v == "inf" || v == "infinity")) return kInfinity;
  if (!v.is_number()) throw ValidationError(std::string("suite config: '") + key + "' must be a number");
  return v.get<double>();
}

json space_summary(const DirichletSpace& s) {
  return json{{"kind", s.kind()}, {"params", s.params()}, {"hash", hash_hex(s.hash())},
              {"size", s.size()},  {"mesh", s.mesh()}};
}

json summary_json(const std::vector<double>& ratios) {
  if (ratios.empty()) return json{{"count", 0}};
  const RatioSummary s = summarize(ratios);
  return json{{"count", ratios.size()}, {"max", s.max}, {"min", s.min}, {"median", s.median}};
}

// max/min of a per-mesh statistic; "stable" means within the given factor.
json trend(const std::vector<double>& meshes, const std::vector<double>& values, double factor = 2.0) {
  json t{{"meshes", meshes}, {"values", values}};
  if (values.size() < 2) {
    t["stable"] = nullptr;
    t["note"] = "single mesh, no refinement trend";
    return t;
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double spread = *lo > 0.0 ? *hi / *lo : kInfinity;
  t["spread"] = number_or_inf(spread);
  t["stable"] = spread <= factor;
  t["factor"] = factor;
  return t;
}

struct Context {
  const DirichletSpace* space;
  SpectralData spec;
  DoublingFit doubling;
  double nu = 0.0;
};

Context prepare(const DirichletSpace& space, const SuiteConfig& cfg) {
  Context c{&space, decompose_cached(space, cfg.cache_dir), {}, 0.0};
  const double h = space.mesh(), diam = space.metric().diameter();
  std::vector<double> radii;
  const double lo = h, hi = std::max(2.0 * h, diam / 4.0);
  for (int k = 0; k < 5; ++k) radii.push_back(lo * std::pow(hi / lo, k / 4.0));
  c.doubling = doubling_fit(space, radii);
  c.nu = cfg.nu > 0.0 ? cfg.nu : std::max(c.doubling.nu, 1e-3);
  return c;
}

json doubling_json(const Context& c) {
  return json{{"VD", {{"nu", c.doubling.nu}, {"constant", c.doubling.constant}, {"residual", c.doubling.max_residual}}},
              {"nu_used", c.nu}};
}

EnsembleSpec ensemble_for(const SuiteConfig& cfg, std::size_t count, std::uint64_t salt = 0) {
  EnsembleSpec e = cfg.ensemble;
  e.count = count;
  e.seed = cfg.seed + salt;
  return e;
}

SuiteReport start(const std::string& tag, const SuiteConfig& cfg) {
  SuiteReport r;
  r.suite = tag;
  r.config = to_json(cfg);
  r.config["suite"] = tag;
  return r;
}

std::vector<double> meshes_of(const SuiteReport& r) {
  std::vector<double> m;
  for (const auto& c : r.cells) m.push_back(c.space["mesh"].get<double>());
  return m;
}

void require_alpha_p(const SuiteConfig& cfg, bool allow_alpha_one) {
  const bool alpha_ok = cfg.alpha > 0.0 && (cfg.alpha < 1.0 || (allow_alpha_one && cfg.alpha == 1.0));
  if (!alpha_ok) throw ValidationError("suite: alpha must lie in (0,1)");
  if (!(cfg.p > 1.0) || std::isinf(cfg.p)) throw ValidationError("suite: p must lie in (1,inf)");
}

double lipschitz_on(const Nonlinearity& F, double a) {
  double lip = 0.0;
  for (int k = 0; k <= 256; ++k) lip = std::max(lip, std::abs(F.derivative(-a + 2.0 * a * k / 256.0)));
  return lip;
}

}  // namespace

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"algebra", "equivalence", "chain", "paralin", "decomposition"};
  return names;
}

json to_json(const SuiteConfig& c) {
  return json{{"suite", c.suite},
              {"alpha", c.alpha},
              {"p", number_or_inf(c.p)},
              {"rho", c.rho},
              {"grid_ppd", c.grid_ppd},
              {"seed", c.seed},
              {"samples", c.samples},
              {"nu", c.nu},
              {"ensemble", to_json(c.ensemble)},
              {"nonlinearities", c.nonlinearities},
              {"amplitudes", c.amplitudes},
              {"order_ppd", c.order_ppd},
              {"paralin_rho", c.paralin_rho},
              {"refine", c.refine}};
}

SuiteConfig suite_config_from_json(const json& j, SuiteConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("suite config must be a JSON object");
  try {
    if (j.contains("suite")) c.suite = j["suite"].get<std::string>();
    if (j.contains("alpha")) c.alpha = read_number(j["alpha"], "alpha");
    if (j.contains("p")) c.p = read_number(j["p"], "p");
    if (j.contains("rho")) c.rho = read_number(j["rho"], "rho");
    if (j.contains("grid_ppd")) c.grid_ppd = j["grid_ppd"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("samples")) c.samples = j["samples"].get<std::size_t>();
    if (j.contains("nu")) c.nu = read_number(j["nu"], "nu");
    if (j.contains("ensemble")) c.ensemble = ensemble_from_json(j["ensemble"]);
    if (j.contains("nonlinearities")) c.nonlinearities = j["nonlinearities"].get<std::vector<std::string>>();
    if (j.contains("amplitudes")) c.amplitudes = j["amplitudes"].get<std::vector<double>>();
    if (j.contains("order_ppd")) c.order_ppd = j["order_ppd"].get<std::vector<int>>();
    if (j.contains("paralin_rho")) c.paralin_rho = j["paralin_rho"].get<std::vector<double>>();
    if (j.contains("refine")) c.refine = j["refine"].get<bool>();
    if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("suite config: ") + e.what());
  }
  return c;
}

json to_json(const SuiteReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cell{{"space", c.space}, {"summary", c.summary}, {"probes", c.probes}, {"ratios", c.ratios}};
    if (!c.labels.empty()) cell["labels"] = c.labels;
    cells.push_back(cell);
  }
  return json{{"suite", r.suite}, {"config", r.config}, {"cells", cells}, {"refinement", r.refinement},
              {"verdict", r.verdict}};
}

std::string suite_csv(const SuiteReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "space,hash,mesh,sample,label,ratio\n";
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const auto& c = r.cells[i];
    for (std::size_t k = 0; k < c.ratios.size(); ++k) {
      out << i << ',' << c.space["hash"].get<std::string>() << ',' << c.space["mesh"].get<double>() << ',' << k << ','
          << (k < c.labels.size() ? c.labels[k] : "") << ',' << c.ratios[k] << '\n';
    }
  }
  return out.str();
}

std::vector<DirichletSpace> refinement_set(std::vector<DirichletSpace> spaces, bool refine) {
  if (!refine || spaces.size() != 1) return spaces;
  const DirichletSpace& s = spaces.front();
  json params = s.params();
  const std::string& kind = s.kind();
  if ((kind == "torus_grid" || kind == "box_grid" || kind == "path" || kind == "dumbbell") && params.contains("n")) {
    const int n = params["n"].get<int>();
    if (n / 2 < 4) return spaces;
    params["n"] = n / 2;
  } else if (kind == "sierpinski" && params.value("level", 0) > 1) {
    params["level"] = params["level"].get<int>() - 1;
  } else if (kind == "binary_tree" && params.value("depth", 0) > 2) {
    params["depth"] = params["depth"].get<int>() - 1;
  } else {
    return spaces;
  }
  spaces.insert(spaces.begin(), generate(kind, params));
  return spaces;
}

SuiteReport suite_algebra(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg) {
  require_alpha_p(cfg, true);
  SuiteReport r = start("algebra", cfg);
  std::vector<double> maxima, paraproduct_constants;
  for (const DirichletSpace& space : spaces) {
    const Context ctx = prepare(space, cfg);
    const auto fields = make_ensemble(ctx.spec, ensemble_for(cfg, 2 * cfg.samples));
    SuiteCell cell;
    cell.space = space_summary(space);
    cell.probes = doubling_json(ctx);
    double energy_max = 0.0;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
      const Field& f = fields[2 * i];
      const Field& g = fields[2 * i + 1];
      const double fi = f.cwiseAbs().maxCoeff(), gi = g.cwiseAbs().maxCoeff();
      const double den = sobolev_norm(ctx.spec, f, cfg.alpha, cfg.p) * gi + fi * sobolev_norm(ctx.spec, g, cfg.alpha, cfg.p);
      if (!(den > 0.0)) continue;
      const Field fg = f.cwiseProduct(g);
      cell.ratios.push_back(sobolev_norm(ctx.spec, fg, cfg.alpha, cfg.p) / den);
      // Dirichlet-form Leibniz bound, constant 1.
      const double eden = fi * std::sqrt(energy(space, g, g)) + gi * std::sqrt(energy(space, f, f));
      if (eden > 0.0) energy_max = std::max(energy_max, std::sqrt(energy(space, fg, fg)) / eden);
    }
    cell.summary = summary_json(cell.ratios);
    cell.summary["dirichlet_form_ratio_max"] = energy_max;
    cell.summary["dirichlet_form_constant"] = 1.0;
    if (cfg.alpha < 1.0) {
      const ParaproductConfig pc = make_config(ctx.spec, ctx.nu, cfg.alpha, cfg.grid_ppd);
      double cpi = 0.0;
      for (std::size_t i = 0; i < std::min<std::size_t>(cfg.samples, 16); ++i) {
        const Field& f = fields[2 * i];
        const Field& g = fields[2 * i + 1];
        const double den = sobolev_norm(ctx.spec, f, cfg.alpha, cfg.p) * g.cwiseAbs().maxCoeff();
        if (den > 0.0) cpi = std::max(cpi, sobolev_norm(ctx.spec, paraproduct(ctx.spec, pc, g, f), cfg.alpha, cfg.p) / den);
      }
      cell.summary["paraproduct_constant"] = cpi;
      cell.summary["paraproduct_order"] = pc.order;
      paraproduct_constants.push_back(cpi);
    }
    maxima.push_back(cell.summary.value("max", 0.0));
    r.cells.push_back(std::move(cell));
  }
  r.refinement = {{"max_ratio", trend(meshes_of(r), maxima)}};
  if (!paraproduct_constants.empty()) r.refinement["paraproduct_constant"] = trend(meshes_of(r), paraproduct_constants);
  const json& st = r.refinement["max_ratio"]["stable"];
  r.verdict = st.is_boolean() && !st.get<bool>() ? "not consistent within tolerance: max ratio drifts across meshes"
                                                 : "consistent within tolerance";
  return r;
}

SuiteReport suite_equivalence(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg) {
  require_alpha_p(cfg, false);
  if (!(cfg.rho >= 1.0) || !(cfg.rho < std::min(2.0, cfg.p))) {
    throw ValidationError("equivalence suite: rho must lie in [1, min(2,p))");
  }
  SuiteReport r = start("equivalence", cfg);
  std::vector<double> lows, highs, widths;
  bool necessity_ok = true;
  for (const DirichletSpace& space : spaces) {
    const Context ctx = prepare(space, cfg);
    const auto fields = make_ensemble(ctx.spec, ensemble_for(cfg, cfg.samples));
    SuiteCell cell;
    cell.space = space_summary(space);
    cell.probes = doubling_json(ctx);
    for (const Field& f : fields) {
      const double den = sobolev_norm(ctx.spec, f, cfg.alpha, cfg.p);
      if (!(den > 0.0)) continue;
      cell.ratios.push_back(lp_norm(s_alpha(space, f, cfg.alpha, cfg.rho), space.measure(), cfg.p) / den);
    }
    if (cell.ratios.empty()) throw NumericalError("equivalence suite: every sample was constant");
    cell.summary = summary_json(cell.ratios);
    const double lo = cell.summary["min"], hi = cell.summary["max"];
    cell.summary["bracket_width"] = hi / lo;

    json table = json::array();
    const auto n = ctx.spec.size();
    for (Eigen::Index k = ctx.spec.nullspace_dim; k < std::min<Eigen::Index>(n, ctx.spec.nullspace_dim + 6); ++k) {
      const Field e = ctx.spec.eigenfields.col(k);
      const double lam = ctx.spec.eigenvalues[k];
      const double sob = sobolev_norm(ctx.spec, e, cfg.alpha, cfg.p);
      const double exact = std::pow(lam, cfg.alpha / 2.0) * lp_norm(e, space.measure(), cfg.p);
      table.push_back({{"index", k},
                       {"lambda", lam},
                       {"sobolev_identity_error", std::abs(sob - exact) / exact},
                       {"ratio", lp_norm(s_alpha(space, e, cfg.alpha, cfg.rho), space.measure(), cfg.p) / sob}});
    }
    cell.summary["eigenfields"] = table;

    if (cfg.alpha * cfg.p > ctx.nu) {
      try {
        const ProbeReport hp = holder_probe(space, ctx.spec, 2.0, 2.0, {}, {}, HolderVariant::H, ensemble_for(cfg, 8));
        const double need = cfg.alpha - ctx.nu / cfg.rho - 0.2;
        const bool ok = hp.fit.exponent >= need;
        necessity_ok = necessity_ok && ok;
        cell.probes["H22"] = {{"eta", hp.fit.exponent}, {"r_squared", hp.fit.r_squared}, {"required", need}, {"satisfied", ok}};
      } catch (const ValidationError& e) {
        cell.probes["H22"] = {{"note", std::string("not measurable: ") + e.what()}};
      }
    } else {
      cell.probes["H22"] = {{"note", "alpha p <= nu, necessity cross-check not triggered"}};
    }
    lows.push_back(lo);
    highs.push_back(hi);
    widths.push_back(hi / lo);
    r.cells.push_back(std::move(cell));
  }
  const auto m = meshes_of(r);
  r.refinement = {{"lower", trend(m, lows)}, {"upper", trend(m, highs)}, {"width", trend(m, widths)}};
  bool stable = true;
  for (const char* k : {"lower", "upper"}) {
    const json& st = r.refinement[k]["stable"];
    if (st.is_boolean() && !st.get<bool>()) stable = false;
  }
  r.verdict = stable && necessity_ok ? "consistent within tolerance"
                                     : (stable ? "bracket stable; Holder necessity cross-check not met"
                                               : "not consistent within tolerance: bracket endpoints drift");
  return r;
}

SuiteReport suite_chain(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg) {
  require_alpha_p(cfg, false);
  SuiteReport r = start("chain", cfg);
  std::vector<Nonlinearity> funcs;
  for (const auto& name : cfg.nonlinearities) funcs.push_back(nonlinearity(name));
  std::map<std::string, std::vector<double>> per_f;
  for (const DirichletSpace& space : spaces) {
    const Context ctx = prepare(space, cfg);
    const ParaproductConfig pc = make_config(ctx.spec, ctx.nu, cfg.alpha, cfg.grid_ppd);
    const auto fields = make_ensemble(ctx.spec, ensemble_for(cfg, cfg.samples));
    SuiteCell cell;
    cell.space = space_summary(space);
    cell.probes = doubling_json(ctx);
    json by_f = json::object();
    for (const Nonlinearity& F : funcs) {
      json buckets = json::array();
      double fmax = 0.0;
      for (double a : cfg.amplitudes) {
        std::vector<double> ratios;
        const double lip = lipschitz_on(F, a);
        for (const Field& f0 : fields) {
          const Field f = a * f0;
          const double den = sobolev_norm(ctx.spec, f, cfg.alpha, cfg.p);
          if (!(den > 0.0)) continue;
          const Field Ff = f.unaryExpr([&](double v) { return F.value(v); });
          const double ratio = sobolev_norm(ctx.spec, Ff, cfg.alpha, cfg.p) / den;
          ratios.push_back(ratio);
          cell.ratios.push_back(ratio);
          cell.labels.push_back(F.name + "@" + json(a).dump());
        }
        json b = summary_json(ratios);
        b["amplitude"] = a;
        b["lipschitz"] = lip;
        if (lip > 0.0 && !ratios.empty()) b["max_over_lipschitz"] = b["max"].get<double>() / lip;
        fmax = std::max(fmax, b.value("max", 0.0));
        buckets.push_back(b);
      }
      double residual = 0.0;
      for (std::size_t i = 0; i < std::min<std::size_t>(fields.size(), 4); ++i) {
        residual = std::max(residual, chain_transform(ctx.spec, pc, F, fields[i]).residual);
      }
      json entry{{"buckets", buckets}, {"reconstruction_residual", residual}};
      if (F.name == "square") {
        // ||f^2||_{p,a} against 2 C_Pi ||f||_inf ||f||_{p,a}, C_Pi measured on the same samples.
        double cpi = 0.0, worst = 0.0;
        const std::size_t k = std::min<std::size_t>(fields.size(), 8);
        for (std::size_t i = 0; i < k; ++i) {
          const Field& f = fields[i];
          const double den = sobolev_norm(ctx.spec, f, cfg.alpha, cfg.p) * f.cwiseAbs().maxCoeff();
          if (den > 0.0) cpi = std::max(cpi, sobolev_norm(ctx.spec, paraproduct(ctx.spec, pc, f, f), cfg.alpha, cfg.p) / den);
        }
        for (std::size_t i = 0; i < k; ++i) {
          const Field& f = fields[i];
          const double den = 2.0 * cpi * f.cwiseAbs().maxCoeff() * sobolev_norm(ctx.spec, f, cfg.alpha, cfg.p);
          if (den > 0.0) worst = std::max(worst, sobolev_norm(ctx.spec, f.cwiseAbs2(), cfg.alpha, cfg.p) / den);
        }
        entry["paraproduct_constant"] = cpi;
        entry["square_bound_ratio"] = worst;
      }
      by_f[F.name] = entry;
      per_f[F.name].push_back(fmax);
    }
    cell.summary = summary_json(cell.ratios);
    cell.summary["by_nonlinearity"] = by_f;
    r.cells.push_back(std::move(cell));
  }
  const auto m = meshes_of(r);
  bool stable = true;
  for (const auto& [name, v] : per_f) {
    r.refinement[name] = trend(m, v);
    const json& st = r.refinement[name]["stable"];
    if (st.is_boolean() && !st.get<bool>()) stable = false;
  }
  r.verdict = stable ? "consistent within tolerance" : "not consistent within tolerance: ratios drift across meshes";
  return r;
}

SuiteReport suite_paralin(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg) {
  require_alpha_p(cfg, false);
  SuiteReport r = start("paralin", cfg);
  std::vector<Nonlinearity> funcs;
  for (const auto& name : cfg.nonlinearities) funcs.push_back(nonlinearity(name));
  std::map<std::string, std::vector<double>> series;
  for (const DirichletSpace& space : spaces) {
    const Context ctx = prepare(space, cfg);
    const ParaproductConfig pc = make_config(ctx.spec, ctx.nu, cfg.alpha, cfg.grid_ppd);
    const auto fields = make_ensemble(ctx.spec, ensemble_for(cfg, std::min<std::size_t>(cfg.samples, 8)));
    SuiteCell cell;
    cell.space = space_summary(space);
    cell.probes = doubling_json(ctx);
    json by_f = json::object();
    for (const Nonlinearity& F : funcs) {
      std::vector<double> gain(cfg.paralin_rho.size(), 0.0);
      double discrepancy = 0.0;
      for (const Field& f : fields) {
        const double den = sobolev_norm(ctx.spec, f, cfg.alpha, cfg.p);
        if (!(den > 0.0)) continue;
        const Paralinearization pl = paralinearization_remainder(ctx.spec, pc, F, f);
        discrepancy = std::max(discrepancy, pl.discrepancy);
        for (std::size_t k = 0; k < cfg.paralin_rho.size(); ++k) {
          const double ratio = sobolev_norm(ctx.spec, pl.remainder, cfg.alpha + cfg.paralin_rho[k], cfg.p) / den;
          gain[k] = std::max(gain[k], ratio);
          cell.ratios.push_back(ratio);
          cell.labels.push_back(F.name + "@rho=" + json(cfg.paralin_rho[k]).dump());
        }
      }
      json rows = json::array();
      for (std::size_t k = 0; k < gain.size(); ++k) {
        rows.push_back({{"rho", cfg.paralin_rho[k]}, {"max_ratio", gain[k]}});
        series[F.name + "@rho=" + json(cfg.paralin_rho[k]).dump()].push_back(gain[k]);
      }
      by_f[F.name] = {{"gain", rows}, {"alternate_discrepancy", discrepancy}};
    }
    cell.summary = summary_json(cell.ratios);
    cell.summary["by_nonlinearity"] = by_f;
    cell.summary["admissible_window"] = {{"nu", ctx.nu}, {"alpha", cfg.alpha}, {"p", cfg.p}, {"rho", cfg.paralin_rho}};
    r.cells.push_back(std::move(cell));
  }
  const auto m = meshes_of(r);
  json growth = json::object();
  for (const auto& [key, v] : series) growth[key] = trend(m, v);
  r.refinement = growth;
  r.verdict = "remainder norms reported per rho; growth across meshes marks the loss of smoothing";
  return r;
}

SuiteReport suite_decomposition(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("suite: alpha must lie in (0,1)");
  SuiteReport r = start("decomposition", cfg);
  std::vector<double> maxima;
  double worst = 0.0;
  for (const DirichletSpace& space : spaces) {
    const Context ctx = prepare(space, cfg);
    const ParaproductConfig pc = make_config(ctx.spec, ctx.nu, cfg.alpha, cfg.grid_ppd);
    EnsembleSpec e = ensemble_for(cfg, 2 * cfg.samples);
    e.kind = EnsembleKind::uniform;
    const auto fields = make_ensemble(ctx.spec, e);
    SuiteCell cell;
    cell.space = space_summary(space);
    cell.probes = doubling_json(ctx);
    double split = 0.0;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
      const Field& f = fields[2 * i];
      const Field& g = fields[2 * i + 1];
      const double scale = f.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff();
      cell.ratios.push_back(product_decomposition_residual(ctx.spec, pc, f, g) / scale);
      if (i < 4) {
        const SplitParaproduct sp = paraproduct_split(ctx.spec, pc, g, f);
        const Field full = paraproduct(ctx.spec, pc, g, f);
        split = std::max(split, (sp.first + sp.second - full).cwiseAbs().maxCoeff() / std::max(1e-300, full.cwiseAbs().maxCoeff()));
      }
    }
    cell.summary = summary_json(cell.ratios);
    cell.summary["order"] = pc.order;
    cell.summary["grid_nodes"] = pc.grid.size();
    cell.summary["split_residual"] = split;

    // Residual against quadrature density.
    json study = json::array();
    std::vector<double> lx, ly;
    for (int ppd : cfg.order_ppd) {
      const ParaproductConfig cc = make_config(ctx.spec, ctx.nu, cfg.alpha, ppd);
      double res = 0.0;
      for (std::size_t i = 0; i < std::min<std::size_t>(cfg.samples, 8); ++i) {
        const Field& f = fields[2 * i];
        const Field& g = fields[2 * i + 1];
        res = std::max(res, product_decomposition_residual(ctx.spec, cc, f, g) /
                                (f.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff()));
      }
      study.push_back({{"points_per_decade", ppd}, {"max_residual", res}});
      if (res > 0.0) {
        lx.push_back(std::log(static_cast<double>(ppd)));
        ly.push_back(std::log(res));
      }
    }
    cell.summary["ppd_study"] = study;
    if (lx.size() >= 2) cell.summary["residual_order"] = -fit_line(lx, ly).slope;
    const double mx = cell.summary.value("max", 0.0);
    worst = std::max(worst, mx);
    maxima.push_back(mx);
    r.cells.push_back(std::move(cell));
  }
  r.refinement = {{"max_residual", trend(meshes_of(r), maxima, 10.0)}};
  r.verdict = worst <= 1e-5 ? "consistent within tolerance (max residual <= 1e-5 ||f||_inf ||g||_inf)"
                            : "not consistent within tolerance: residual above 1e-5";
  return r;
}

SuiteReport run_suite(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg) {
  if (spaces.empty()) throw ValidationError("suite: no spaces given");
  const auto set = refinement_set(spaces, cfg.refine);
  if (cfg.suite == "algebra") return suite_algebra(set, cfg);
  if (cfg.suite == "equivalence") return suite_equivalence(set, cfg);
  if (cfg.suite == "chain") return suite_chain(set, cfg);
  if (cfg.suite == "paralin") return suite_paralin(set, cfg);
  if (cfg.suite == "decomposition") return suite_decomposition(set, cfg);
  throw ValidationError("unknown suite '" + cfg.suite + "' (valid: algebra, equivalence, chain, paralin, decomposition)");
}

}  // namespace dircalc
