#include "dircalc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dircalc/errors.hpp"

namespace dircalc {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit_line: size mismatch");
  LinearFit fit;
  fit.points = x.size();
  if (x.empty()) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

namespace {

template <typename Vec>
double lp_norm_impl(const Vec& f, const Eigen::VectorXd& measure, double p) {
  if (f.size() != measure.size()) throw ValidationError("lp_norm: size mismatch");
  if (!(p >= 1.0)) throw ValidationError("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
    return m;
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += measure[i] * std::pow(std::abs(f[i]), p);
  return std::pow(s, 1.0 / p);
}

// psi_p(y) = |y|^{p-1} sign(y), the duality map of l^p.
Eigen::VectorXcd duality_map(const Eigen::VectorXcd& y, double p) {
  Eigen::VectorXcd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double a = std::abs(y[i]);
    out[i] = a > 0.0 ? std::pow(a, p - 2.0) * y[i] : std::complex<double>(0.0);
  }
  return out;
}

double lp_plain(const Eigen::VectorXcd& v, double p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

double lp_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& measure, double p) {
  return lp_norm_impl(f, measure, p);
}

double lp_norm(const Eigen::VectorXcd& f, const Eigen::VectorXd& measure, double p) {
  return lp_norm_impl(f, measure, p);
}

NormBound operator_norm(const Eigen::MatrixXcd& A, const Eigen::VectorXd& measure, double p,
                        std::uint64_t seed, int starts, int iterations) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || measure.size() != n) throw ValidationError("operator_norm: shape mismatch");
  if (!(p >= 1.0)) throw ValidationError("operator_norm: p must be >= 1");

  // L^1(mu): extreme points of the unit ball are normalised Dirac masses.
  double norm1 = 0.0;
  for (Eigen::Index y = 0; y < n; ++y) {
    double s = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) s += std::abs(A(x, y)) * measure[x];
    norm1 = std::max(norm1, s / measure[y]);
  }
  double norm_inf = 0.0;
  for (Eigen::Index x = 0; x < n; ++x) norm_inf = std::max(norm_inf, A.row(x).cwiseAbs().sum());

  if (p == 1.0) return {norm1, norm1, true};
  if (std::isinf(p)) return {norm_inf, norm_inf, true};

  const Eigen::VectorXd sq = measure.cwiseSqrt();
  const Eigen::MatrixXcd B2 = sq.asDiagonal() * A * sq.cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(B2, p == 2.0 ? 0 : Eigen::ComputeThinV);
  const double norm2 = svd.singularValues()(0);
  if (p == 2.0) return {norm2, norm2, true};

  NormBound bound;
  bound.upper = std::pow(norm1, 1.0 / p) * std::pow(norm_inf, 1.0 - 1.0 / p);
  if (p > 2.0) {
    bound.upper = std::min(bound.upper, std::pow(norm2, 2.0 / p) * std::pow(norm_inf, 1.0 - 2.0 / p));
  } else {
    const double theta = 2.0 - 2.0 / p;  // 1/p = (1-theta)/1 + theta/2
    bound.upper = std::min(bound.upper, std::pow(norm1, 1.0 - theta) * std::pow(norm2, theta));
  }

  // Boyd iteration on B = M^{1/p} A M^{-1/p} in plain l^p.
  Eigen::VectorXd wp(n), wpinv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    wp[i] = std::pow(measure[i], 1.0 / p);
    wpinv[i] = 1.0 / wp[i];
  }
  const Eigen::MatrixXcd B = wp.asDiagonal() * A * wpinv.asDiagonal();
  const Eigen::MatrixXcd Bh = B.adjoint();
  const double q = p / (p - 1.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXcd x(n);
    if (s == 0) {
      x = svd.matrixV().col(0);  // l^2 maximiser as a warm start
    } else {
      for (Eigen::Index i = 0; i < n; ++i) x[i] = {normal(rng), 0.0};
    }
    x /= lp_plain(x, p);
    for (int it = 0; it < iterations; ++it) {
      const Eigen::VectorXcd y = B * x;
      const double val = lp_plain(y, p);
      bound.lower = std::max(bound.lower, val);
      if (val == 0.0) break;
      const Eigen::VectorXcd z = Bh * duality_map(y, p);
      Eigen::VectorXcd next = duality_map(z, q);
      const double nn = lp_plain(next, p);
      if (!(nn > 0.0)) break;
      next /= nn;
      if ((next - x).norm() < 1e-13) break;
      x = next;
    }
    bound.lower = std::max(bound.lower, lp_plain(B * x, p));
  }
  bound.lower = std::min(bound.lower, bound.upper);
  return bound;
}

NormBound operator_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& measure, double p,
                        std::uint64_t seed, int starts, int iterations) {
  return operator_norm(Eigen::MatrixXcd(A.cast<std::complex<double>>()), measure, p, seed, starts,
                       iterations);
}

double restricted_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& measure,
                       std::span<const std::size_t> rows, std::span<const std::size_t> cols, double p, double q) {
  if (rows.empty() || cols.empty()) throw ValidationError("restricted_norm: empty vertex set");
  const auto nr = static_cast<Eigen::Index>(rows.size()), nc = static_cast<Eigen::Index>(cols.size());
  auto a = [&](Eigen::Index i, Eigen::Index j) {
    return A(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]),
             static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
  };
  auto mu_row = [&](Eigen::Index i) { return measure[static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)])]; };
  auto mu_col = [&](Eigen::Index j) { return measure[static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)])]; };
  double best = 0.0;
  if (p == 2.0 && q == 2.0) {
    Eigen::MatrixXd B(nr, nc);
    for (Eigen::Index i = 0; i < nr; ++i) {
      for (Eigen::Index j = 0; j < nc; ++j) B(i, j) = std::sqrt(mu_row(i)) * a(i, j) / std::sqrt(mu_col(j));
    }
    return spectral_norm(B);
  }
  if (p == 1.0 && q == 1.0) {
    for (Eigen::Index j = 0; j < nc; ++j) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < nr; ++i) s += std::abs(a(i, j)) * mu_row(i);
      best = std::max(best, s / mu_col(j));
    }
    return best;
  }
  if (std::isinf(p) && std::isinf(q)) {
    for (Eigen::Index i = 0; i < nr; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < nc; ++j) s += std::abs(a(i, j));
      best = std::max(best, s);
    }
    return best;
  }
  if (p == 1.0 && std::isinf(q)) {
    for (Eigen::Index i = 0; i < nr; ++i) {
      for (Eigen::Index j = 0; j < nc; ++j) best = std::max(best, std::abs(a(i, j)) / mu_col(j));
    }
    return best;
  }
  throw ValidationError("restricted_norm: exact only for (p,q) in {(2,2), (1,1), (inf,inf), (1,inf)}");
}

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  if (A.rows() >= A.cols()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.transpose() * A, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A * A.transpose(), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  double m = *mid;
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), mid));
  }
  return m;
}

}  // namespace dircalc
