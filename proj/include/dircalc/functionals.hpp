#pragma once

#include <vector>

#include <Eigen/Core>

#include "dircalc/calculus.hpp"
#include "dircalc/space.hpp"

namespace dircalc {

/// F(y, t_j) for every grid node; column j is the slice F_{t_j}.
struct TimeField {
  ScaleGrid grid;
  Eigen::MatrixXd slices;
};

/// Q_t^(N) f sampled on the grid.
TimeField q_slices(const SpectralData& spec, const ScaleGrid& grid, double N, const Field& f);

/// Uncentered maximal function sup_{B containing x} (avg_B |f|^q)^{1/q}; q = inf gives ||f||_inf.
Field maximal(const DirichletSpace& space, const Field& f, double q);

/// g_N f(x) = (int |Q_t^(N) f(x)|^2 dt/t)^{1/2}, closed form per eigenvalue pair.
Field horizontal_square(const SpectralData& spec, double N, const Field& f);
/// g~_{N,alpha} f = (int |(tL)^alpha P_t^(N) f|^2 dt/t)^{1/2} on `grid`, with the small-t tail in closed form.
Field horizontal_square_alpha(const SpectralData& spec, const ScaleGrid& grid, double N, double alpha,
                              const Field& f);

enum class VerticalVariant { G, G_tilde };
/// G_N uses sqrt(t) grad P_t^(N) (quadrature on `grid`); G~_N uses sqrt(t) grad Q_t^(N) (closed form).
Field vertical_square(const DirichletSpace& space, const SpectralData& spec, const ScaleGrid& grid, double N,
                      const Field& f, VerticalVariant variant);

/// Sum over the cone d(x,y) <= sqrt(t_j) of |Q_t f(y)|^2 w_j mu(y) / V(y, sqrt(t_j)).
Field conical_square(const DirichletSpace& space, const SpectralData& spec, const ScaleGrid& grid, double N,
                     const Field& f);

/// rho-osc_B f = (avg_B |f - avg_B f|^rho)^{1/rho}; rho = inf gives max_B |f - avg_B f|.
double oscillation(const DirichletSpace& space, const Ball& b, const Field& f, double rho);

struct SAlphaOptions {
  int points_per_decade = 16;
  /// Use avg_B |f - f(x)| instead of the mean oscillation.
  bool pointwise = false;
  /// Explicit radius grid; empty means geometric over [mesh, diameter].
  std::vector<double> radii;
};

/// S_alpha^rho f(x) = (int_0^inf [r^{-alpha} rho-osc_{B(x,r)} f]^2 dr/r)^{1/2}.
Field s_alpha(const DirichletSpace& space, const Field& f, double alpha, double rho,
              const SAlphaOptions& options = {});

/// C_p(F)(x) = sup_{B containing x} (avg_B (int_0^{r(B)^2} |F(y,t)|^2 dt/t)^{p/2})^{1/p}.
Field carleson_function(const DirichletSpace& space, const TimeField& F, double p);
double carleson(const DirichletSpace& space, const TimeField& F, double p);
/// N_*(F)(x) = sup_{d(x,y) <= sqrt(t_j)} |F(y, t_j)|.
Field nontangential_max(const DirichletSpace& space, const TimeField& F);

/// (int_M (int |F|^2 |G|^2 dt/t)^{p/2} dmu)^{1/p} / (||N_* F||_p ||C_{p+eps} G||_inf).
double carleson_duality_ratio(const DirichletSpace& space, const TimeField& F, const TimeField& G, double p,
                              double eps);

/// ||(int |F_t|^2 dt/t)^{1/2}||_p
double square_norm(const DirichletSpace& space, const TimeField& F, double p);

struct RatioSummary {
  std::vector<double> ratios;
  double max = 0.0;
  double min = 0.0;
  double median = 0.0;
};
RatioSummary summarize(std::vector<double> ratios);

/// ||(int M_q[F_t]^2 dt/t)^{1/2}||_p / ||(int |F_t|^2 dt/t)^{1/2}||_p over an ensemble.
RatioSummary fefferman_stein_check(const DirichletSpace& space, const std::vector<TimeField>& ensemble, double p,
                                   double q);

/// ||int Q_t F_t dt/t||_p / ||(int |Q~_t F_t|^2 dt/t)^{1/2}||_p with Q~_t^2 = Q_t^(N).
double orthogonality_ratio(const DirichletSpace& space, const SpectralData& spec, double N, const TimeField& F,
                           double p);

}  // namespace dircalc
