#include "dircalc/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "dircalc/errors.hpp"
#include "dircalc/special.hpp"

namespace dircalc {

namespace {

void require_field(const SpectralData& spec, const Field& f, const char* what) {
  if (static_cast<std::size_t>(f.size()) != spec.size()) {
    throw ValidationError(std::string(what) + ": field length does not match the spectrum");
  }
}

void require_positive(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError(std::string(what) + " must be positive and finite");
}

}  // namespace

double SpectralData::lambda_min() const {
  if (size() < 2) return 0.0;
  return eigenvalues[static_cast<Eigen::Index>(nullspace_dim)];
}

Eigen::VectorXd SpectralData::coefficients(const Field& f) const {
  require_field(*this, f, "coefficients");
  return eigenfields.transpose() * f.cwiseProduct(measure);
}

Field SpectralData::synthesize(const Eigen::VectorXd& c) const { return eigenfields * c; }

Field SpectralData::project_nullspace(const Field& f) const {
  require_field(*this, f, "project_nullspace");
  const double m = f.cwiseProduct(measure).sum() / measure.sum();
  return Field::Constant(f.size(), m);
}

Field SpectralData::apply(const Eigen::VectorXd& m, const Field& f) const {
  return synthesize(m.cwiseProduct(coefficients(f)));
}

Eigen::MatrixXd SpectralData::operator_matrix(const Eigen::VectorXd& m) const {
  return eigenfields * m.asDiagonal() * eigenfields.transpose() * measure.asDiagonal();
}

SpectralData decompose(const DirichletSpace& space, std::size_t max_vertices) {
  const std::size_t n = space.size();
  if (n > max_vertices) {
    throw ValidationError("decompose: " + std::to_string(n) + " vertices exceeds the cap of " +
                          std::to_string(max_vertices));
  }
  const auto ni = static_cast<Eigen::Index>(n);
  const Eigen::VectorXd isq = space.measure().cwiseSqrt().cwiseInverse();

  // S = M^{-1/2} (D - W) M^{-1/2}, symmetric with the spectrum of L.
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(ni, ni);
  for (const Edge& e : space.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u), v = static_cast<Eigen::Index>(e.v);
    S(u, u) += e.weight;
    S(v, v) += e.weight;
    S(u, v) -= e.weight;
    S(v, u) -= e.weight;
  }
  S = isq.asDiagonal() * S * isq.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  if (solver.info() != Eigen::Success) throw NumericalError("decompose: symmetric eigensolver failed");

  SpectralData spec;
  spec.measure = space.measure();
  spec.eigenvalues = solver.eigenvalues();
  Eigen::MatrixXd U = solver.eigenvectors();
  const double lmax = std::max(std::abs(spec.eigenvalues[ni - 1]), 1e-300);

  // Exact nullspace: the normalized constant.
  U.col(0) = space.measure().cwiseSqrt() / std::sqrt(space.total_measure());
  spec.eigenvalues[0] = 0.0;
  for (Eigen::Index i = 1; i < ni; ++i) {
    if (spec.eigenvalues[i] < 0.0) spec.eigenvalues[i] = 0.0;
    Eigen::Index k = 0;
    U.col(i).cwiseAbs().maxCoeff(&k);
    if (U(k, i) < 0.0) U.col(i) = -U.col(i);
  }
  if (n > 1 && spec.eigenvalues[1] <= 1e-10 * lmax) {
    throw NumericalError("decompose: second eigenvalue " + std::to_string(spec.eigenvalues[1]) +
                         " is numerically zero; the space looks disconnected");
  }

  spec.residual = (S * U - U * spec.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff();
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd probe(ni);
  for (Eigen::Index i = 0; i < ni; ++i) probe[i] = normal(rng);
  spec.orthogonality_error = (U.transpose() * (U * probe) - probe).norm() / probe.norm();
  if (spec.residual > 1e-8 * lmax || spec.orthogonality_error > 1e-10) {
    throw NumericalError("decompose: residual " + std::to_string(spec.residual) + " (lambda_max " +
                         std::to_string(lmax) + "), orthogonality error " +
                         std::to_string(spec.orthogonality_error));
  }
  spec.eigenfields = isq.asDiagonal() * U;
  return spec;
}

Eigen::VectorXd multiplier(const SpectralData& spec, const SpectralFunction& phi) {
  Eigen::VectorXd m(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m[i] = phi(spec.eigenvalues[i]);
    if (!std::isfinite(m[i])) {
      throw NumericalError("apply_function: non-finite value at eigenvalue " + std::to_string(spec.eigenvalues[i]));
    }
  }
  return m;
}

Field apply_function(const SpectralData& spec, const SpectralFunction& phi, const Field& f) {
  return spec.apply(multiplier(spec, phi), f);
}

Field heat(const SpectralData& spec, double t, const Field& f) {
  if (!(t >= 0.0)) throw ValidationError("heat: t must be nonnegative");
  return spec.apply((-t * spec.eigenvalues).array().exp().matrix(), f);
}

Eigen::MatrixXd heat_kernel(const SpectralData& spec, double t) {
  if (!(t >= 0.0)) throw ValidationError("heat_kernel: t must be nonnegative");
  const Eigen::VectorXd m = (-t * spec.eigenvalues).array().exp().matrix();
  return spec.eigenfields * m.asDiagonal() * spec.eigenfields.transpose();
}

Field fractional_power(const SpectralData& spec, double beta, const Field& f) {
  Eigen::VectorXd m(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m[i] = static_cast<std::size_t>(i) < spec.nullspace_dim ? 0.0 : std::pow(spec.eigenvalues[i], beta);
  }
  return spec.apply(m, f);
}

double sobolev_norm(const SpectralData& spec, const Field& f, double alpha, double p) {
  return lp_norm(fractional_power(spec, 0.5 * alpha, f), spec.measure, p);
}

namespace {

Eigen::VectorXcd imaginary_symbol(const SpectralData& spec, double beta) {
  Eigen::VectorXcd m(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m[i] = static_cast<std::size_t>(i) < spec.nullspace_dim
               ? std::complex<double>(0.0)
               : std::polar(1.0, beta * std::log(spec.eigenvalues[i]));
  }
  return m;
}

}  // namespace

Eigen::VectorXcd imaginary_power(const SpectralData& spec, double beta, const Field& f) {
  const Eigen::VectorXcd c = spec.coefficients(f).cast<std::complex<double>>();
  return spec.eigenfields.cast<std::complex<double>>() * imaginary_symbol(spec, beta).cwiseProduct(c);
}

Eigen::MatrixXcd imaginary_power_matrix(const SpectralData& spec, double beta) {
  const Eigen::MatrixXcd E = spec.eigenfields.cast<std::complex<double>>();
  return E * imaginary_symbol(spec, beta).asDiagonal() * E.transpose() *
         spec.measure.cast<std::complex<double>>().asDiagonal();
}

NormBound imaginary_power_norm(const SpectralData& spec, double beta, double p, std::uint64_t seed) {
  return operator_norm(imaginary_power_matrix(spec, beta), spec.measure, p, seed);
}

Eigen::VectorXd q_multiplier(const SpectralData& spec, double t, double N) {
  require_positive(t, "t");
  require_positive(N, "N");
  Eigen::VectorXd m(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = q_symbol(t * spec.eigenvalues[i], N);
  return m;
}

Eigen::VectorXd p_multiplier(const SpectralData& spec, double t, double N) {
  require_positive(t, "t");
  require_positive(N, "N");
  Eigen::VectorXd m(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = p_symbol(t * spec.eigenvalues[i], N);
  return m;
}

Eigen::VectorXd r_multiplier(const SpectralData& spec, double t, double N) {
  require_positive(t, "t");
  require_positive(N, "N");
  Eigen::VectorXd m(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = r_symbol(t * spec.eigenvalues[i], N);
  return m;
}

Field q_op(const SpectralData& spec, double t, double N, const Field& f) {
  return spec.apply(q_multiplier(spec, t, N), f);
}

Field p_op(const SpectralData& spec, double t, double N, const Field& f) {
  return spec.apply(p_multiplier(spec, t, N), f);
}

Field r_op(const SpectralData& spec, double t, double N, const Field& f) {
  return spec.apply(r_multiplier(spec, t, N), f);
}

Field calderon_reconstruct(const SpectralData& spec, double N, const Field& f, double a, double b) {
  require_positive(N, "N");
  if (!(a >= 0.0) || !(b > a)) throw ValidationError("calderon_reconstruct: need 0 <= a < b");
  Eigen::VectorXd m(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double lam = spec.eigenvalues[i];
    if (static_cast<std::size_t>(i) < spec.nullspace_dim) {
      m[i] = 0.0;
      continue;
    }
    const double lower = p_symbol(a * lam, N);
    const double upper = std::isinf(b) ? 0.0 : p_symbol(b * lam, N);
    m[i] = lower - upper;
  }
  return spec.apply(m, f);
}

double sign_factor(IntegralSign sign) { return sign == IntegralSign::corrected ? -1.0 : 1.0; }

Field p_from_integral(const SpectralData& spec, double t, double N, const Field& f, IntegralSign sign) {
  require_positive(t, "t");
  return f + sign_factor(sign) * calderon_reconstruct(spec, N, f, 0.0, t);
}

ScaleGrid ScaleGrid::geometric(double t_min, double t_max, int points_per_decade) {
  if (!(t_min > 0.0) || !(t_max > t_min) || !std::isfinite(t_max)) {
    throw ValidationError("ScaleGrid: need 0 < t_min < t_max < inf");
  }
  if (points_per_decade < 1) throw ValidationError("ScaleGrid: points_per_decade must be >= 1");
  ScaleGrid grid;
  grid.t_min = t_min;
  grid.t_max = t_max;
  grid.points_per_decade = points_per_decade;
  const double span = std::log(t_max / t_min);
  const auto intervals =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(points_per_decade * span / std::log(10.0) - 1e-9)));
  const double step = span / static_cast<double>(intervals);
  grid.nodes.resize(intervals + 1);
  grid.weights.assign(intervals + 1, step);
  for (std::size_t j = 0; j <= intervals; ++j) grid.nodes[j] = t_min * std::exp(step * static_cast<double>(j));
  grid.nodes.back() = t_max;
  grid.weights.front() = grid.weights.back() = 0.5 * step;
  return grid;
}

ScaleGrid ScaleGrid::for_spectrum(const SpectralData& spec, int points_per_decade, double N) {
  require_positive(N, "N");
  if (spec.size() < 2) throw ValidationError("ScaleGrid: the space has no nonzero eigenvalue");
  const double lower = std::min(1e-2, std::pow(1e-4, 1.0 / N));
  return geometric(lower / spec.lambda_max(), 1e2 / spec.lambda_min(), points_per_decade);
}

Field scale_integrate(const ScaleGrid& grid, const std::function<Field(double)>& phi) {
  Field acc;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Field v = phi(grid.nodes[j]);
    if (!v.allFinite()) {
      throw NumericalError("scale_integrate: non-finite integrand at t=" + std::to_string(grid.nodes[j]));
    }
    if (j == 0) {
      acc = grid.weights[j] * v;
    } else {
      acc += grid.weights[j] * v;
    }
  }
  return acc;
}

Eigen::MatrixXd spectral_slices(const SpectralData& spec, const ScaleGrid& grid,
                                const Eigen::VectorXd& coefficients,
                                const std::function<double(double)>& symbol) {
  const Eigen::Index n = spec.eigenvalues.size();
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd C(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) C(i, j) = symbol(grid.nodes[j] * spec.eigenvalues[i]) * coefficients[i];
  }
  return spec.eigenfields * C;
}

}  // namespace dircalc
