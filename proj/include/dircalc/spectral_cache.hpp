#pragma once

#include <optional>
#include <string>

#include "dircalc/calculus.hpp"

namespace dircalc {

/// Binary spectral cache keyed by the space hash: <dir>/<hash>.spec
std::string cache_path(const std::string& dir, const DirichletSpace& space);
void save_spectrum(const SpectralData& spec, const DirichletSpace& space, const std::string& path);
std::optional<SpectralData> load_spectrum(const DirichletSpace& space, const std::string& path);

/// Decomposes through the cache in `dir`, falling back to $DIRCALC_CACHE; no cache if both are empty.
SpectralData decompose_cached(const DirichletSpace& space, const std::string& dir = "");

}  // namespace dircalc
