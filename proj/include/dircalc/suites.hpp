#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "dircalc/ensemble.hpp"
#include "dircalc/space.hpp"

namespace dircalc {

struct SuiteConfig {
  std::string suite = "algebra";  // algebra | equivalence | chain | paralin | decomposition
  double alpha = 0.5;
  double p = 2.0;
  double rho = 1.5;
  int grid_ppd = 32;
  std::uint64_t seed = 0;
  std::size_t samples = 50;
  /// Dimension used for the paraproduct order; 0 takes the fitted doubling exponent.
  double nu = 0.0;
  EnsembleSpec ensemble;
  std::vector<std::string> nonlinearities{"identity", "square", "sin", "tanh"};
  std::vector<double> amplitudes{0.5, 1.0, 2.0};
  std::vector<int> order_ppd{2, 4};
  std::vector<double> paralin_rho{0.0, 0.25, 0.5};
  std::string cache_dir;
  /// Add a coarser mesh when a single generated space is given.
  bool refine = true;
};

nlohmann::json to_json(const SuiteConfig& c);
/// Overlay the keys present in `j` on `base`.
SuiteConfig suite_config_from_json(const nlohmann::json& j, SuiteConfig base = {});
const std::vector<std::string>& suite_names();

struct SuiteCell {
  nlohmann::json space;  // kind, params, hash, size, mesh
  std::vector<double> ratios;
  std::vector<std::string> labels;  // one per ratio, empty when unlabelled
  nlohmann::json summary;
  nlohmann::json probes;
};

struct SuiteReport {
  std::string suite;
  nlohmann::json config;
  std::vector<SuiteCell> cells;
  nlohmann::json refinement;
  std::string verdict;
};

nlohmann::json to_json(const SuiteReport& r);
/// Columns: space, hash, mesh, sample, label, ratio.
std::string suite_csv(const SuiteReport& r);
std::string hash_hex(std::uint64_t h);

/// Coarser companion mesh for generated families, or nothing when none exists.
std::vector<DirichletSpace> refinement_set(std::vector<DirichletSpace> spaces, bool refine);

SuiteReport suite_algebra(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg);
SuiteReport suite_equivalence(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg);
SuiteReport suite_chain(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg);
SuiteReport suite_paralin(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg);
SuiteReport suite_decomposition(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg);
SuiteReport run_suite(const std::vector<DirichletSpace>& spaces, const SuiteConfig& cfg);

}  // namespace dircalc
