#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "dircalc/numerics.hpp"
#include "dircalc/space.hpp"

namespace dircalc {

/// mu-orthonormal eigendecomposition of L. Column i of `eigenfields` is e_i; column 0 is the
/// normalized constant with eigenvalue exactly 0.
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenfields;
  Eigen::VectorXd measure;
  std::size_t nullspace_dim = 1;
  double residual = 0.0;
  double orthogonality_error = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double lambda_max() const { return eigenvalues[eigenvalues.size() - 1]; }
  /// Smallest nonzero eigenvalue.
  double lambda_min() const;

  /// c_i = <f, e_i>_mu
  Eigen::VectorXd coefficients(const Field& f) const;
  Field synthesize(const Eigen::VectorXd& c) const;
  /// P_{N(L)} f, the mu-average times 1.
  Field project_nullspace(const Field& f) const;
  /// sum_i m_i <f, e_i>_mu e_i
  Field apply(const Eigen::VectorXd& multiplier, const Field& f) const;
  /// Matrix of the spectral multiplier acting on vertex values.
  Eigen::MatrixXd operator_matrix(const Eigen::VectorXd& multiplier) const;
};

using SpectralFunction = std::function<double(double)>;

SpectralData decompose(const DirichletSpace& space, std::size_t max_vertices = 4096);

/// phi evaluated on the spectrum; throws NumericalError on non-finite values.
Eigen::VectorXd multiplier(const SpectralData& spec, const SpectralFunction& phi);
Field apply_function(const SpectralData& spec, const SpectralFunction& phi, const Field& f);

Field heat(const SpectralData& spec, double t, const Field& f);
/// p_t(x,y) so that e^{-tL} f(x) = sum_y p_t(x,y) f(y) mu(y).
Eigen::MatrixXd heat_kernel(const SpectralData& spec, double t);

/// L^beta on the range of L; the nullspace is annihilated for every beta.
Field fractional_power(const SpectralData& spec, double beta, const Field& f);
Eigen::VectorXcd imaginary_power(const SpectralData& spec, double beta, const Field& f);
Eigen::MatrixXcd imaginary_power_matrix(const SpectralData& spec, double beta);
NormBound imaginary_power_norm(const SpectralData& spec, double beta, double p, std::uint64_t seed = 0);

/// ||L^{alpha/2} f||_p, the homogeneous Sobolev seminorm.
double sobolev_norm(const SpectralData& spec, const Field& f, double alpha, double p);

/// Spectral multipliers of Q_t^(N), P_t^(N), R_t^(N).
Eigen::VectorXd q_multiplier(const SpectralData& spec, double t, double N);
Eigen::VectorXd p_multiplier(const SpectralData& spec, double t, double N);
Eigen::VectorXd r_multiplier(const SpectralData& spec, double t, double N);

Field q_op(const SpectralData& spec, double t, double N, const Field& f);
Field p_op(const SpectralData& spec, double t, double N, const Field& f);
Field r_op(const SpectralData& spec, double t, double N, const Field& f);

/// Closed-form int_a^b Q_t^(N) f dt/t; a may be 0 and b may be infinity.
Field calderon_reconstruct(const SpectralData& spec, double N, const Field& f, double a, double b);

/// Sign in front of int_0^t Q_s ds/s when rebuilding P_t. `corrected` is Id - int; `as_printed`
/// is the displayed Id + int, kept for verbatim comparison.
enum class IntegralSign { corrected, as_printed };
double sign_factor(IntegralSign sign);
Field p_from_integral(const SpectralData& spec, double t, double N, const Field& f,
                      IntegralSign sign = IntegralSign::corrected);

/// Geometric nodes with log-trapezoid weights: int phi(t) dt/t ~ sum_j w_j phi(t_j).
struct ScaleGrid {
  double t_min = 0.0;
  double t_max = 0.0;
  int points_per_decade = 32;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  static ScaleGrid geometric(double t_min, double t_max, int points_per_decade);
  /// t_min = min(1e-2, 1e-4^{1/N}) / lambda_max, t_max = 1e2 / lambda_1.
  static ScaleGrid for_spectrum(const SpectralData& spec, int points_per_decade = 32, double N = 2.0);
};

Field scale_integrate(const ScaleGrid& grid, const std::function<Field(double)>& phi);

/// Columns j = sum_i symbol(t_j lambda_i) c_i e_i for every grid node, as one n-by-m matrix.
Eigen::MatrixXd spectral_slices(const SpectralData& spec, const ScaleGrid& grid,
                                const Eigen::VectorXd& coefficients,
                                const std::function<double(double)>& symbol);

}  // namespace dircalc
