#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "dircalc/calculus.hpp"

namespace dircalc {

enum class EnsembleKind { band_limited, heat_mollified_bump, random_signs, eigenfield, uniform };

EnsembleKind parse_ensemble_kind(const std::string& name);
std::string to_string(EnsembleKind kind);

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::band_limited;
  std::size_t count = 16;
  std::uint64_t seed = 0;
  /// band_limited: spectral window, in units of lambda_1 (the smallest nonzero eigenvalue).
  double band_lo = 1.0;
  double band_hi = 40.0;
  /// heat_mollified_bump: smoothing time in units of 1/lambda_1.
  double t0 = 0.05;
  /// eigenfield: index of the first mode; sample i uses mode k + i.
  std::size_t mode = 1;
  /// Scale every sample to ||f||_inf = 1; otherwise to ||f||_2 = 1.
  bool normalize_sup = true;
};

EnsembleSpec ensemble_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EnsembleSpec& e);

/// Reproducible from (kind, count, seed).
std::vector<Field> make_ensemble(const SpectralData& spec, const EnsembleSpec& e);

}  // namespace dircalc
