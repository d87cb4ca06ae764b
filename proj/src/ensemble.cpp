#include "dircalc/ensemble.hpp"

#include <cmath>
#include <random>

#include "dircalc/errors.hpp"

namespace dircalc {

using nlohmann::json;

EnsembleKind parse_ensemble_kind(const std::string& name) {
  if (name == "band_limited") return EnsembleKind::band_limited;
  if (name == "heat_mollified_bump") return EnsembleKind::heat_mollified_bump;
  if (name == "random_signs") return EnsembleKind::random_signs;
  if (name == "eigenfield") return EnsembleKind::eigenfield;
  if (name == "uniform") return EnsembleKind::uniform;
  throw ValidationError("unknown ensemble kind '" + name +
                        "' (valid: band_limited, heat_mollified_bump, random_signs, eigenfield, uniform)");
}

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::band_limited: return "band_limited";
    case EnsembleKind::heat_mollified_bump: return "heat_mollified_bump";
    case EnsembleKind::random_signs: return "random_signs";
    case EnsembleKind::eigenfield: return "eigenfield";
    case EnsembleKind::uniform: return "uniform";
  }
  return "band_limited";
}

EnsembleSpec ensemble_from_json(const json& j) {
  EnsembleSpec e;
  if (j.is_null()) return e;
  if (!j.is_object()) throw ValidationError("ensemble: expected an object");
  try {
    if (j.contains("kind")) e.kind = parse_ensemble_kind(j["kind"].get<std::string>());
    e.count = j.value("count", e.count);
    e.seed = j.value("seed", e.seed);
    e.band_lo = j.value("band_lo", e.band_lo);
    e.band_hi = j.value("band_hi", e.band_hi);
    e.t0 = j.value("t0", e.t0);
    e.mode = j.value("mode", e.mode);
    e.normalize_sup = j.value("normalize_sup", e.normalize_sup);
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("ensemble: ") + ex.what());
  }
  return e;
}

json to_json(const EnsembleSpec& e) {
  return json{{"kind", to_string(e.kind)}, {"count", e.count},     {"seed", e.seed},
              {"band_lo", e.band_lo},      {"band_hi", e.band_hi}, {"t0", e.t0},
              {"mode", e.mode},            {"normalize_sup", e.normalize_sup}};
}

std::vector<Field> make_ensemble(const SpectralData& spec, const EnsembleSpec& e) {
  const auto n = static_cast<Eigen::Index>(spec.size());
  if (n < 2) throw ValidationError("ensemble: the space needs at least two vertices");
  if (e.count == 0) throw ValidationError("ensemble: count must be positive");
  std::mt19937_64 rng(e.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  const double l1 = spec.lambda_min();

  std::vector<Eigen::Index> band;
  if (e.kind == EnsembleKind::band_limited) {
    if (!(e.band_lo > 0.0) || !(e.band_hi >= e.band_lo)) throw ValidationError("ensemble: need 0 < band_lo <= band_hi");
    for (Eigen::Index i = spec.nullspace_dim; i < n; ++i) {
      const double lam = spec.eigenvalues[i] / l1;
      if (lam >= e.band_lo * (1.0 - 1e-9) && lam <= e.band_hi * (1.0 + 1e-9)) band.push_back(i);
    }
    if (band.empty()) throw ValidationError("ensemble: no eigenvalue inside the band");
  }

  std::vector<Field> out;
  out.reserve(e.count);
  for (std::size_t s = 0; s < e.count; ++s) {
    Field f(n);
    switch (e.kind) {
      case EnsembleKind::band_limited: {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i : band) c[i] = normal(rng);
        f = spec.synthesize(c);
        break;
      }
      case EnsembleKind::heat_mollified_bump: {
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        Field bump = Field::Zero(n);
        bump[pick(rng)] = 1.0;
        f = heat(spec, e.t0 / l1, bump);
        f -= spec.project_nullspace(f);
        break;
      }
      case EnsembleKind::random_signs:
        for (Eigen::Index i = 0; i < n; ++i) f[i] = rng() & 1u ? 1.0 : -1.0;
        break;
      case EnsembleKind::eigenfield: {
        const auto k = static_cast<Eigen::Index>(e.mode + s);
        if (k >= n) throw ValidationError("ensemble: eigenfield index beyond the spectrum");
        f = spec.eigenfields.col(k);
        break;
      }
      case EnsembleKind::uniform:
        for (Eigen::Index i = 0; i < n; ++i) f[i] = uniform(rng);
        break;
    }
    const double scale = e.normalize_sup ? f.cwiseAbs().maxCoeff() : lp_norm(f, spec.measure, 2.0);
    if (!(scale > 0.0)) throw NumericalError("ensemble: generated a zero field");
    out.push_back(f / scale);
  }
  return out;
}

}  // namespace dircalc
