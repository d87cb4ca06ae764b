#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace dircalc {

struct ReportEntry {
  std::string file;  // name relative to the scanned directory
  std::string type;  // "probe" or "suite"
  nlohmann::json doc;
};

/// Every probe or suite report in `dir`, sorted by file name. Other JSON files are skipped.
std::vector<ReportEntry> collect_reports(const std::string& dir);

/// One row per probe report and one per suite cell.
/// Columns: file, type, tag, space, exponent, constant, residual, r_squared, count, max, median, min, verdict.
std::string aggregate_csv(const std::vector<ReportEntry>& entries);
nlohmann::json aggregate_json(const std::vector<ReportEntry>& entries);

/// (file name, CSV text) pairs: regression points for probes, per-sample ratios for suites.
std::vector<std::pair<std::string, std::string>> plot_data(const std::vector<ReportEntry>& entries);

}  // namespace dircalc
