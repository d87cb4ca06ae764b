#include "dircalc/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dircalc/errors.hpp"

namespace dircalc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

json field(const json& j, const char* key) { return j.is_object() && j.contains(key) ? j[key] : json(); }

std::string stem(const std::string& file) { return fs::path(file).stem().string(); }

}  // namespace

std::vector<ReportEntry> collect_reports(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("report: '" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ReportEntry> out;
  for (const auto& path : files) {
    std::ifstream in(path);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw ValidationError("report: " + path.filename().string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) continue;
    if (doc.contains("suite") && doc.contains("cells")) {
      out.push_back({path.filename().string(), "suite", std::move(doc)});
    } else if (doc.contains("tag") && doc.contains("fit")) {
      out.push_back({path.filename().string(), "probe", std::move(doc)});
    }
  }
  return out;
}

std::string aggregate_csv(const std::vector<ReportEntry>& entries) {
  std::ostringstream out;
  out << "file,type,tag,space,exponent,constant,residual,r_squared,count,max,median,min,verdict\n";
  for (const auto& e : entries) {
    if (e.type == "probe") {
      const json& fit = e.doc["fit"];
      out << cell(e.file) << ",probe," << cell(e.doc["tag"]) << ',' << cell(field(field(e.doc, "samples"), "space_hash"))
          << ',' << cell(field(fit, "exponent")) << ',' << cell(field(fit, "constant")) << ','
          << cell(field(fit, "residual")) << ',' << cell(field(fit, "r_squared")) << ",,,,,\n";
      continue;
    }
    for (const auto& c : e.doc["cells"]) {
      const json& s = c["summary"];
      out << cell(e.file) << ",suite," << cell(e.doc["suite"]) << ',' << cell(field(c["space"], "hash")) << ",,,,,"
          << cell(field(s, "count")) << ',' << cell(field(s, "max")) << ',' << cell(field(s, "median")) << ','
          << cell(field(s, "min")) << ',' << cell(e.doc["verdict"]) << '\n';
    }
  }
  return out.str();
}

json aggregate_json(const std::vector<ReportEntry>& entries) {
  json reports = json::array();
  for (const auto& e : entries) {
    json row{{"file", e.file}, {"type", e.type}};
    if (e.type == "probe") {
      row["tag"] = e.doc["tag"];
      row["params"] = field(e.doc, "params");
      row["fit"] = e.doc["fit"];
    } else {
      row["tag"] = e.doc["suite"];
      row["verdict"] = field(e.doc, "verdict");
      row["refinement"] = field(e.doc, "refinement");
      json cells = json::array();
      for (const auto& c : e.doc["cells"]) cells.push_back({{"space", c["space"]}, {"summary", c["summary"]}});
      row["cells"] = cells;
    }
    reports.push_back(row);
  }
  return json{{"count", entries.size()}, {"reports", reports}};
}

std::vector<std::pair<std::string, std::string>> plot_data(const std::vector<ReportEntry>& entries) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : entries) {
    std::ostringstream csv;
    csv.precision(17);
    if (e.type == "probe") {
      csv << "x,y\n";
      for (const auto& pt : field(field(e.doc, "samples"), "points")) csv << pt[0].get<double>() << ',' << pt[1].get<double>() << '\n';
      out.emplace_back(stem(e.file) + ".points.csv", csv.str());
    } else {
      csv << "cell,mesh,sample,ratio\n";
      std::size_t i = 0;
      for (const auto& c : e.doc["cells"]) {
        std::size_t k = 0;
        for (const auto& v : c["ratios"]) csv << i << ',' << c["space"]["mesh"].get<double>() << ',' << k++ << ',' << v.get<double>() << '\n';
        ++i;
      }
      out.emplace_back(stem(e.file) + ".ratios.csv", csv.str());
    }
  }
  return out;
}

}  // namespace dircalc
