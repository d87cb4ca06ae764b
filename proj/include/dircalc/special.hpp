#pragma once

namespace dircalc {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a), a > 0, x >= 0.
double gamma_q(double a, double x);
/// log Q(a, x); finite well past the point where Q itself underflows.
double log_gamma_q(double a, double x);

/// Spectral symbols of the operator families at x = t*lambda.
/// q_N(x) = x^N e^{-x} / Gamma(N)
double q_symbol(double x, double N);
/// phi_N(x) = Gamma(N, x) / Gamma(N)
double p_symbol(double x, double N);
/// phi_N(x) e^{x/2}
double r_symbol(double x, double N);

}  // namespace dircalc
