#pragma once

#include <vector>

#include <Eigen/Core>

#include "dircalc/calculus.hpp"
#include "dircalc/nonlinearity.hpp"

namespace dircalc {

/// Q_t = Q_t^(D), P_t = P_t^(D) on a shared scale grid.
struct ParaproductConfig {
  double order = 12.0;
  ScaleGrid grid;
  double alpha = 0.5;
};

/// ceil(4(1+nu)) rounded up to an even integer.
int default_order(double nu);
ParaproductConfig make_config(const SpectralData& spec, double nu = 2.0, double alpha = 0.5,
                              int points_per_decade = 32);

/// Pi_g(f) = int Q_t f . P_t g dt/t
Field paraproduct(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g, const Field& f);

struct SplitParaproduct {
  Field first;   // int (I - P_t)[Q_t f . P_t g] dt/t
  Field second;  // int P_t[Q_t f . P_t g] dt/t
};
SplitParaproduct paraproduct_split(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g,
                                   const Field& f);

struct KernelApplication {
  Field value;
  /// mu-average of h removed before L^{-alpha/2}.
  double projected_mass = 0.0;
};

/// K(s,t) h = Q_s L^{alpha/2} (Q_t L^{-alpha/2} h . P_t g)
KernelApplication kernel_apply(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g, double s,
                               double t, const Field& h);

struct KernelIntegral {
  Field quadrature;  // double sum over grid nodes s <= t
  Field direct;      // L^{alpha/2} Pi^1_g L^{-alpha/2} h
  double projected_mass = 0.0;
  double relative_error = 0.0;
};
KernelIntegral kernel_double_integral(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g,
                                      const Field& h);

/// Matrix of K(s,t) in mu-orthonormal eigen-coordinates (its 2-norm is the L^2(mu) norm).
Eigen::MatrixXd kernel_matrix(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g, double s,
                              double t);
/// Same operator acting on vertex values.
Eigen::MatrixXd kernel_vertex_matrix(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g,
                                     double s, double t);

/// ||fg - Pi_g f - Pi_f g - P_N f . P_N g||_p
double product_decomposition_residual(const SpectralData& spec, const ParaproductConfig& cfg, const Field& f,
                                      const Field& g, double p = kInfinity);

struct ChainResult {
  Field transform;       // F-bar(f) = int Q_t f . F'(P_t f) dt/t
  Field reconstruction;  // sign * F-bar(f) + F(P_N f)
  double residual = 0.0; // ||F(f) - reconstruction||_inf
};
ChainResult chain_transform(const SpectralData& spec, const ParaproductConfig& cfg, const Nonlinearity& F,
                            const Field& f, IntegralSign sign = IntegralSign::corrected);

struct Paralinearization {
  Field remainder;   // F(f) - Pi_{F'(f)}(f)
  Field alternate;   // int Q_t f [F'(P_t f) - P_t F'(f)] dt/t + F(P_N f)
  double discrepancy = 0.0;
};
Paralinearization paralinearization_remainder(const SpectralData& spec, const ParaproductConfig& cfg,
                                              const Nonlinearity& F, const Field& f);

}  // namespace dircalc
