#include "dircalc/nonlinearity.hpp"

#include <cmath>
#include <map>

#include "dircalc/errors.hpp"

namespace dircalc {

namespace {

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

const std::map<std::string, Nonlinearity>& registry() {
  static const std::map<std::string, Nonlinearity> table = [] {
    std::map<std::string, Nonlinearity> t;
    t["identity"] = {"identity", [](double x) { return x; }, [](double) { return 1.0; },
                     [](double) { return 0.0; }};
    t["square"] = {"square", [](double x) { return x * x; }, [](double x) { return 2.0 * x; },
                   [](double) { return 2.0; }};
    t["sin"] = {"sin", [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
                [](double x) { return -std::sin(x); }};
    t["tanh"] = {"tanh", [](double x) { return std::tanh(x); },
                 [](double x) {
                   const double th = std::tanh(x);
                   return 1.0 - th * th;
                 },
                 [](double x) {
                   const double th = std::tanh(x);
                   return -2.0 * th * (1.0 - th * th);
                 }};
    t["softplus_shifted"] = {"softplus_shifted",
                             [](double x) {
                               const double sp = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
                               return sp - std::log(2.0);
                             },
                             [](double x) { return sigmoid(x); },
                             [](double x) {
                               const double s = sigmoid(x);
                               return s * (1.0 - s);
                             }};
    return t;
  }();
  return table;
}

}  // namespace

const Nonlinearity& nonlinearity(const std::string& name) {
  const auto& table = registry();
  const auto it = table.find(name);
  if (it == table.end()) {
    std::string valid;
    for (const auto& [key, value] : table) valid += (valid.empty() ? "" : ", ") + key;
    throw ValidationError("unknown nonlinearity '" + name + "' (valid: " + valid + ")");
  }
  return it->second;
}

std::vector<std::string> nonlinearity_names() {
  std::vector<std::string> names;
  for (const auto& [key, value] : registry()) names.push_back(key);
  return names;
}

}  // namespace dircalc
