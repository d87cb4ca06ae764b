#include "dircalc/special.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dircalc/errors.hpp"

namespace dircalc {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

// log of the common prefactor x^a e^{-x} / Gamma(a).
double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

// Lower series: P(a,x) = x^a e^{-x}/Gamma(a+1) * sum_n x^n / ((a+1)...(a+n)).
double series_p(double a, double x) {
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) {
      return std::exp(log_prefactor(a, x)) * sum;
    }
  }
  throw NumericalError("gamma_q: series did not converge for a=" + std::to_string(a) +
                       ", x=" + std::to_string(x));
}

// log of the continued fraction for Q(a,x) / (x^a e^{-x} / Gamma(a)), modified Lentz.
double log_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return std::log(h);
  }
  throw NumericalError("gamma_q: continued fraction did not converge for a=" + std::to_string(a) +
                       ", x=" + std::to_string(x));
}

void check_args(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("incomplete gamma: order must be positive");
  if (!(x >= 0.0) || std::isnan(x)) throw ValidationError("incomplete gamma: argument must be >= 0");
}

}  // namespace

double log_gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  if (x < a + 1.0) return std::log1p(-series_p(a, x));
  return log_prefactor(a, x) + log_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - series_p(a, x);
  const double lq = log_prefactor(a, x) + log_continued_fraction(a, x);
  return lq < -745.0 ? 0.0 : std::exp(lq);
}

double q_symbol(double x, double N) {
  if (!(N > 0.0)) throw ValidationError("q_symbol: N must be positive");
  if (!(x >= 0.0)) throw ValidationError("q_symbol: argument must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 0.0;
  return std::exp(N * std::log(x) - x - std::lgamma(N));
}

double p_symbol(double x, double N) { return gamma_q(N, x); }

double r_symbol(double x, double N) {
  if (std::isinf(x)) return 0.0;
  return std::exp(log_gamma_q(N, x) + 0.5 * x);
}

}  // namespace dircalc
