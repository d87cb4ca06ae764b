#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dircalc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Least-squares line y = slope * x + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double max_residual = 0.0;
  std::size_t points = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// (sum_x mu(x) |f(x)|^p)^{1/p}; p = infinity gives the max norm.
double lp_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& measure, double p);
double lp_norm(const Eigen::VectorXcd& f, const Eigen::VectorXd& measure, double p);

/// Two-sided bound on an L^p(mu) -> L^p(mu) operator norm.
struct NormBound {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
};

/// Norm of T f(x) = sum_y A(x,y) f(y) on L^p(mu). Exact for p in {1, 2, inf}; otherwise the
/// lower bound comes from Boyd's power iteration over random starts and the upper bound from
/// Riesz-Thorin interpolation between the exact endpoint norms.
NormBound operator_norm(const Eigen::MatrixXcd& A, const Eigen::VectorXd& measure, double p,
                        std::uint64_t seed = 0, int starts = 8, int iterations = 60);
NormBound operator_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& measure, double p,
                        std::uint64_t seed = 0, int starts = 8, int iterations = 60);

/// ||1_F T 1_E||_{L^p(E) -> L^q(F)} for T f(x) = sum_y A(x,y) f(y); exact for
/// (p,q) in {(2,2), (1,1), (inf,inf), (1,inf)}.
double restricted_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& measure,
                       std::span<const std::size_t> rows, std::span<const std::size_t> cols, double p, double q);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& A);

double median(std::vector<double> values);

}  // namespace dircalc
