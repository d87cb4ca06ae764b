#include "dircalc/paraproduct.hpp"

#include <cmath>
#include <string>

#include "dircalc/errors.hpp"
#include "dircalc/special.hpp"

namespace dircalc {

namespace {

void check(const SpectralData& spec, const ParaproductConfig& cfg, const Field& a, const Field& b) {
  if (!(cfg.order > 0.0)) throw ValidationError("paraproduct: order D must be positive");
  if (cfg.grid.size() == 0) throw ValidationError("paraproduct: empty scale grid");
  if (static_cast<std::size_t>(a.size()) != spec.size() || static_cast<std::size_t>(b.size()) != spec.size()) {
    throw ValidationError("paraproduct: field length does not match the spectrum");
  }
}

Eigen::MatrixXd slices(const SpectralData& spec, const ParaproductConfig& cfg, const Field& f, bool q) {
  const double D = cfg.order;
  if (q) return spectral_slices(spec, cfg.grid, spec.coefficients(f), [D](double x) { return q_symbol(x, D); });
  return spectral_slices(spec, cfg.grid, spec.coefficients(f), [D](double x) { return p_symbol(x, D); });
}

Field weighted_sum(const ParaproductConfig& cfg, const Eigen::MatrixXd& S) {
  Field acc = Field::Zero(S.rows());
  for (Eigen::Index j = 0; j < S.cols(); ++j) acc += cfg.grid.weights[static_cast<std::size_t>(j)] * S.col(j);
  if (!acc.allFinite()) throw NumericalError("paraproduct: non-finite quadrature sum");
  return acc;
}

Field fractional_on_range(const SpectralData& spec, double beta, const Field& h, double* mass) {
  if (mass) *mass = h.cwiseProduct(spec.measure).sum() / spec.measure.sum();
  return fractional_power(spec, beta, h);
}

Eigen::VectorXd power_symbol(const SpectralData& spec, double beta) {
  Eigen::VectorXd m(spec.eigenvalues.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m[i] = static_cast<std::size_t>(i) < spec.nullspace_dim ? 0.0 : std::pow(spec.eigenvalues[i], beta);
  }
  return m;
}

}  // namespace

int default_order(double nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw ValidationError("default_order: nu must be finite and >= 0");
  int D = static_cast<int>(std::ceil(4.0 * (1.0 + nu) - 1e-12));
  if (D % 2 != 0) ++D;
  return D;
}

ParaproductConfig make_config(const SpectralData& spec, double nu, double alpha, int points_per_decade) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw ValidationError("paraproduct: alpha must lie in (0, 1)");
  ParaproductConfig cfg;
  cfg.order = default_order(nu);
  cfg.alpha = alpha;
  cfg.grid = ScaleGrid::for_spectrum(spec, points_per_decade, cfg.order);
  return cfg;
}

Field paraproduct(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g, const Field& f) {
  check(spec, cfg, g, f);
  return weighted_sum(cfg, slices(spec, cfg, f, true).cwiseProduct(slices(spec, cfg, g, false)));
}

SplitParaproduct paraproduct_split(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g,
                                   const Field& f) {
  check(spec, cfg, g, f);
  const Eigen::MatrixXd U = slices(spec, cfg, f, true).cwiseProduct(slices(spec, cfg, g, false));
  const Eigen::MatrixXd C = spec.eigenfields.transpose() * spec.measure.asDiagonal() * U;
  const Eigen::Index n = C.rows();
  Eigen::VectorXd first = Eigen::VectorXd::Zero(n), second = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    const double t = cfg.grid.nodes[static_cast<std::size_t>(j)], w = cfg.grid.weights[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double phi = p_symbol(t * spec.eigenvalues[i], cfg.order);
      first[i] += w * (1.0 - phi) * C(i, j);
      second[i] += w * phi * C(i, j);
    }
  }
  return {spec.synthesize(first), spec.synthesize(second)};
}

KernelApplication kernel_apply(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g, double s,
                               double t, const Field& h) {
  check(spec, cfg, g, h);
  if (!(s > 0.0) || !(t > 0.0)) throw ValidationError("kernel_apply: s and t must be positive");
  KernelApplication out;
  const Field inner = q_op(spec, t, cfg.order, fractional_on_range(spec, -0.5 * cfg.alpha, h, &out.projected_mass));
  const Field product = inner.cwiseProduct(p_op(spec, t, cfg.order, g));
  out.value = q_op(spec, s, cfg.order, fractional_power(spec, 0.5 * cfg.alpha, product));
  return out;
}

KernelIntegral kernel_double_integral(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g,
                                      const Field& h) {
  check(spec, cfg, g, h);
  KernelIntegral out;
  const Field hr = fractional_on_range(spec, -0.5 * cfg.alpha, h, &out.projected_mass);
  const Eigen::MatrixXd U = slices(spec, cfg, hr, true).cwiseProduct(slices(spec, cfg, g, false));
  const Eigen::MatrixXd C = spec.eigenfields.transpose() * spec.measure.asDiagonal() * U;
  const Eigen::Index n = C.rows(), m = C.cols();
  const auto& nodes = cfg.grid.nodes;
  const double step = std::log(nodes.size() > 1 ? nodes[1] / nodes[0] : 1.0);
  const Eigen::VectorXd lift = power_symbol(spec, 0.5 * cfg.alpha);

  Eigen::VectorXd quad = Eigen::VectorXd::Zero(n), direct = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = spec.nullspace_dim; i < n; ++i) {
    const double lam = spec.eigenvalues[i];
    // int_0^{t_min} Q_s ds/s in closed form, then trapezoid over nodes s_0..s_j with the
    // Euler-Maclaurin end correction; d/du Q(e^u lam) = (N - x) Q.
    const double head = 1.0 - p_symbol(nodes.front() * lam, cfg.order);
    const double x0 = nodes.front() * lam;
    const double q0 = q_symbol(x0, cfg.order);
    const double d0 = (cfg.order - x0) * q0;
    double running = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double xj = nodes[static_cast<std::size_t>(j)] * lam;
      const double qj = q_symbol(xj, cfg.order);
      running += qj;
      const double inner =
          j == 0 ? 0.0 : step * (running - 0.5 * q0 - 0.5 * qj) - step * step / 12.0 * ((cfg.order - xj) * qj - d0);
      const double w = cfg.grid.weights[static_cast<std::size_t>(j)];
      quad[i] += w * (head + inner) * C(i, j);
      direct[i] += w * (1.0 - p_symbol(nodes[static_cast<std::size_t>(j)] * lam, cfg.order)) * C(i, j);
    }
    quad[i] *= lift[i];
    direct[i] *= lift[i];
  }
  out.quadrature = spec.synthesize(quad);
  out.direct = spec.synthesize(direct);
  const double scale = out.direct.norm();
  out.relative_error = scale > 0.0 ? (out.quadrature - out.direct).norm() / scale : (out.quadrature).norm();
  return out;
}

Eigen::MatrixXd kernel_matrix(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g, double s,
                              double t) {
  if (!(s > 0.0) || !(t > 0.0)) throw ValidationError("kernel_matrix: s and t must be positive");
  if (static_cast<std::size_t>(g.size()) != spec.size()) throw ValidationError("kernel_matrix: size mismatch");
  const Field ptg = p_op(spec, t, cfg.order, g);
  const Eigen::MatrixXd M = spec.eigenfields.transpose() * ptg.cwiseProduct(spec.measure).asDiagonal() *
                            spec.eigenfields;
  const Eigen::Index n = M.rows();
  Eigen::VectorXd left = Eigen::VectorXd::Zero(n), right = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = spec.nullspace_dim; i < n; ++i) {
    const double lam = spec.eigenvalues[i];
    left[i] = q_symbol(s * lam, cfg.order) * std::pow(lam, 0.5 * cfg.alpha);
    right[i] = q_symbol(t * lam, cfg.order) * std::pow(lam, -0.5 * cfg.alpha);
  }
  return left.asDiagonal() * M * right.asDiagonal();
}

Eigen::MatrixXd kernel_vertex_matrix(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g,
                                     double s, double t) {
  return spec.eigenfields * kernel_matrix(spec, cfg, g, s, t) * spec.eigenfields.transpose() *
         spec.measure.asDiagonal();
}

double product_decomposition_residual(const SpectralData& spec, const ParaproductConfig& cfg, const Field& f,
                                      const Field& g, double p) {
  check(spec, cfg, f, g);
  const Eigen::MatrixXd Qf = slices(spec, cfg, f, true), Pf = slices(spec, cfg, f, false);
  const Eigen::MatrixXd Qg = slices(spec, cfg, g, true), Pg = slices(spec, cfg, g, false);
  const Field pi_g_f = weighted_sum(cfg, Qf.cwiseProduct(Pg));
  const Field pi_f_g = weighted_sum(cfg, Qg.cwiseProduct(Pf));
  const Field residual = f.cwiseProduct(g) - pi_g_f - pi_f_g -
                         spec.project_nullspace(f).cwiseProduct(spec.project_nullspace(g));
  return lp_norm(residual, spec.measure, p);
}

ChainResult chain_transform(const SpectralData& spec, const ParaproductConfig& cfg, const Nonlinearity& F,
                            const Field& f, IntegralSign sign) {
  check(spec, cfg, f, f);
  const Eigen::MatrixXd Qf = slices(spec, cfg, f, true);
  Eigen::MatrixXd Pf = slices(spec, cfg, f, false);
  for (Eigen::Index k = 0; k < Pf.size(); ++k) Pf.data()[k] = F.derivative(Pf.data()[k]);
  if (!Pf.allFinite()) throw NumericalError("chain_transform: F' is not finite along P_t f");
  ChainResult out;
  out.transform = weighted_sum(cfg, Qf.cwiseProduct(Pf));
  const double c = spec.project_nullspace(f)[0];
  out.reconstruction = -sign_factor(sign) * out.transform + Field::Constant(f.size(), F.value(c));
  Field Ff = f.unaryExpr(F.value);
  out.residual = (Ff - out.reconstruction).cwiseAbs().maxCoeff();
  return out;
}

Paralinearization paralinearization_remainder(const SpectralData& spec, const ParaproductConfig& cfg,
                                              const Nonlinearity& F, const Field& f) {
  check(spec, cfg, f, f);
  const Field dF = f.unaryExpr(F.derivative);
  Paralinearization out;
  out.remainder = f.unaryExpr(F.value) - paraproduct(spec, cfg, dF, f);

  const Eigen::MatrixXd Qf = slices(spec, cfg, f, true);
  Eigen::MatrixXd along = slices(spec, cfg, f, false);
  for (Eigen::Index k = 0; k < along.size(); ++k) along.data()[k] = F.derivative(along.data()[k]);
  const Eigen::MatrixXd PdF = slices(spec, cfg, dF, false);
  const double c = spec.project_nullspace(f)[0];
  out.alternate = weighted_sum(cfg, Qf.cwiseProduct(along - PdF)) + Field::Constant(f.size(), F.value(c));
  out.discrepancy = (out.remainder - out.alternate).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace dircalc
