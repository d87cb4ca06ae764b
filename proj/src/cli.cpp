#include "dircalc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"

#include "dircalc/errors.hpp"
#include "dircalc/probes.hpp"
#include "dircalc/report.hpp"
#include "dircalc/spectral_cache.hpp"
#include "dircalc/suites.hpp"

namespace dircalc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json parse_json_arg(const std::string& text, const std::string& what) {
  if (text.empty()) return json::object();
  std::string body = text;
  if (text.front() == '@') {
    std::ifstream in(text.substr(1));
    if (!in) throw ValidationError("cannot read " + what + " file " + text.substr(1));
    std::ostringstream s;
    s << in.rdbuf();
    body = s.str();
  }
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ValidationError(what + " is not valid JSON: " + e.what());
  }
}

json read_json_file(const std::string& path, const std::string& what) {
  return path.empty() ? json::object() : parse_json_arg("@" + path, what);
}

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

std::string list_of(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return s;
}

struct GenArgs {
  std::string kind, out, params;
  int d = 2, n = 16, level = 3, depth = 5, neck = 2;
};

struct ProbeArgs {
  std::string space, tag, params, out, csv, cache_dir;
  std::uint64_t seed = 0;
};

struct SuiteArgs {
  std::vector<std::string> spaces;
  std::string suite, out = ".", config, cache_dir, ensemble;
  double alpha = 0.5, p = 2.0, rho = 1.5, nu = 0.0;
  int grid_ppd = 32;
  std::uint64_t seed = 0;
  std::size_t samples = 50;
  bool no_refine = false;
};

struct ReportArgs {
  std::string in, format = "json", out;
  bool plot_data = false;
};

int do_gen(const GenArgs& a, const CLI::App& cmd, std::ostream& out) {
  json params = parse_json_arg(a.params, "--params");
  auto set = [&](const char* flag, const char* key, int v) {
    if (cmd.count(flag) > 0 || !params.contains(key)) params[key] = v;
  };
  if (a.kind == "torus_grid" || a.kind == "box_grid") {
    set("--d", "d", a.d);
    set("--n", "n", a.n);
  } else if (a.kind == "path") {
    set("--n", "n", a.n);
  } else if (a.kind == "dumbbell") {
    set("--n", "n", a.n);
    set("--neck", "neck", a.neck);
    params["d"] = 2;
  } else if (a.kind == "binary_tree") {
    set("--depth", "depth", a.depth);
  } else if (a.kind == "sierpinski") {
    set("--level", "level", a.level);
  } else {
    throw ValidationError("unknown space kind '" + a.kind + "' (valid: " + list_of(generator_kinds()) + ")");
  }
  const DirichletSpace s = generate(a.kind, params);
  if (a.out.empty()) {
    out << space_to_json(s).dump(2) << '\n';
  } else {
    save_space(s, a.out);
    out << "wrote " << a.out << " (" << s.size() << " vertices, hash " << hash_hex(s.hash()) << ")\n";
  }
  return 0;
}

int do_probe(const ProbeArgs& a, std::ostream& out) {
  const auto& tags = hypothesis_tags();
  if (std::find(tags.begin(), tags.end(), a.tag) == tags.end()) {
    throw ValidationError("unknown hypothesis tag '" + a.tag + "' (valid: " + list_of(tags) + ")");
  }
  const json params = parse_json_arg(a.params, "--params");
  const DirichletSpace space = load_space(a.space);
  const SpectralData spec = decompose_cached(space, a.cache_dir);
  const ProbeReport r = run_probe(space, spec, a.tag, params, a.seed);
  const std::string doc = to_json(r).dump(2) + "\n";
  if (a.out.empty()) {
    out << doc;
  } else {
    write_text(a.out, doc);
    write_text(a.csv.empty() ? fs::path(a.out).replace_extension(".csv").string() : a.csv, points_csv(r));
    out << r.tag << ": exponent " << r.fit.exponent << ", constant " << r.fit.constant << ", R^2 " << r.fit.r_squared
        << '\n';
  }
  return 0;
}

int do_suite(const SuiteArgs& a, const CLI::App& cmd, std::ostream& out) {
  SuiteConfig cfg = suite_config_from_json(read_json_file(a.config, "--config"));
  if (cmd.count("--suite")) cfg.suite = a.suite;
  if (cmd.count("--alpha")) cfg.alpha = a.alpha;
  if (cmd.count("--p")) cfg.p = a.p;
  if (cmd.count("--rho")) cfg.rho = a.rho;
  if (cmd.count("--nu")) cfg.nu = a.nu;
  if (cmd.count("--grid-ppd")) cfg.grid_ppd = a.grid_ppd;
  if (cmd.count("--seed")) cfg.seed = a.seed;
  if (cmd.count("--samples")) cfg.samples = a.samples;
  if (cmd.count("--ensemble")) cfg.ensemble = ensemble_from_json(parse_json_arg(a.ensemble, "--ensemble"));
  if (cmd.count("--cache-dir")) cfg.cache_dir = a.cache_dir;
  if (a.no_refine) cfg.refine = false;
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), cfg.suite) == names.end()) {
    throw ValidationError("unknown suite '" + cfg.suite + "' (valid: " + list_of(names) + ")");
  }
  std::vector<DirichletSpace> spaces;
  for (const auto& path : a.spaces) spaces.push_back(load_space(path));
  const SuiteReport r = run_suite(spaces, cfg);
  const fs::path dir(a.out);
  write_text((dir / (cfg.suite + ".json")).string(), to_json(r).dump(2) + "\n");
  write_text((dir / (cfg.suite + ".csv")).string(), suite_csv(r));
  for (const auto& c : r.cells) {
    out << cfg.suite << ": " << c.space["kind"].get<std::string>() << " n=" << c.space["size"] << " max "
        << c.summary.value("max", 0.0) << " median " << c.summary.value("median", 0.0);
    if (cfg.suite == "decomposition") out << " (max residual " << c.summary.value("max", 0.0) << ")";
    out << '\n';
  }
  out << "verdict: " << r.verdict << '\n';
  return 0;
}

int do_report(const ReportArgs& a, std::ostream& out) {
  const auto entries = collect_reports(a.in);
  const std::string text = a.format == "csv" ? aggregate_csv(entries) : aggregate_json(entries).dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_text(a.out, text);
  }
  if (a.plot_data) {
    const fs::path dir = fs::path(a.in) / "plot";
    for (const auto& [name, csv] : plot_data(entries)) write_text((dir / name).string(), csv);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heat-semigroup calculus on finite Dirichlet spaces"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a space file");
  gen_cmd->add_option("--kind", gen.kind, "space family")->required();
  gen_cmd->add_option("--d", gen.d, "grid dimension");
  gen_cmd->add_option("--n", gen.n, "side length");
  gen_cmd->add_option("--level", gen.level, "Sierpinski level");
  gen_cmd->add_option("--depth", gen.depth, "binary tree depth");
  gen_cmd->add_option("--neck", gen.neck, "dumbbell neck length");
  gen_cmd->add_option("--params", gen.params, "extra parameters as JSON or @file");
  gen_cmd->add_option("--out", gen.out, "output path (stdout when omitted)");

  ProbeArgs probe;
  auto* probe_cmd = app.add_subcommand("probe", "measure a hypothesis on a space");
  probe_cmd->add_option("--space", probe.space, "space file")->required();
  probe_cmd->add_option("--hypothesis", probe.tag, "hypothesis tag")->required();
  probe_cmd->add_option("--params", probe.params, "probe parameters as JSON or @file");
  probe_cmd->add_option("--seed", probe.seed, "random seed");
  probe_cmd->add_option("--out", probe.out, "report path (stdout when omitted)");
  probe_cmd->add_option("--csv", probe.csv, "regression points path");
  probe_cmd->add_option("--cache-dir", probe.cache_dir, "spectral cache directory");

  SuiteArgs suite;
  auto* suite_cmd = app.add_subcommand("suite", "run a theorem suite over one or more spaces");
  suite_cmd->add_option("--space,--spaces", suite.spaces, "space files")->required();
  suite_cmd->add_option("--suite", suite.suite, "algebra | equivalence | chain | paralin | decomposition");
  suite_cmd->add_option("--alpha", suite.alpha, "smoothness");
  suite_cmd->add_option("--p", suite.p, "integrability");
  suite_cmd->add_option("--rho", suite.rho, "oscillation exponent");
  suite_cmd->add_option("--nu", suite.nu, "dimension for the paraproduct order (fitted when omitted)");
  suite_cmd->add_option("--grid-ppd", suite.grid_ppd, "scale grid points per decade");
  suite_cmd->add_option("--seed", suite.seed, "random seed");
  suite_cmd->add_option("--samples", suite.samples, "samples per space");
  suite_cmd->add_option("--ensemble", suite.ensemble, "ensemble spec as JSON or @file");
  suite_cmd->add_option("--config", suite.config, "JSON config file; flags win");
  suite_cmd->add_option("--cache-dir", suite.cache_dir, "spectral cache directory");
  suite_cmd->add_flag("--no-refine", suite.no_refine, "do not add a coarser companion mesh");
  suite_cmd->add_option("--out", suite.out, "output directory");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "aggregate a directory of reports");
  report_cmd->add_option("--in", report.in, "directory of reports")->required();
  report_cmd->add_option("--format", report.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  report_cmd->add_flag("--plot-data", report.plot_data, "write per-report plot CSVs under <in>/plot");
  report_cmd->add_option("--out", report.out, "output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*gen_cmd) return do_gen(gen, *gen_cmd, out);
    if (*probe_cmd) return do_probe(probe, out);
    if (*suite_cmd) return do_suite(suite, *suite_cmd, out);
    if (*report_cmd) return do_report(report, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace dircalc
