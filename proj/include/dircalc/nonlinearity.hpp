#pragma once

#include <functional>
#include <string>
#include <vector>

namespace dircalc {

/// Scalar nonlinearity with closed-form derivatives.
struct Nonlinearity {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> second;
};

/// identity, square, sin, tanh, softplus_shifted (log(1+e^x) - log 2).
const Nonlinearity& nonlinearity(const std::string& name);
std::vector<std::string> nonlinearity_names();

}  // namespace dircalc
