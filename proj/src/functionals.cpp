#include "dircalc/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dircalc/errors.hpp"
#include "dircalc/numerics.hpp"
#include "dircalc/special.hpp"

namespace dircalc {

namespace {

// Prefix sizes of by_distance(z) that are closed balls: the ends of each distance tie group.
std::vector<std::size_t> ball_ends(const Metric& m, Vertex z) {
  const auto d = m.sorted_distances(z);
  std::vector<std::size_t> ends;
  for (std::size_t k = 1; k <= d.size(); ++k) {
    if (k == d.size() || d[k] > d[k - 1] + 1e-10 * std::max(1.0, d[k - 1])) ends.push_back(k);
  }
  return ends;
}

// Uncentered sup: each vertex takes the largest value over the balls (z, end) that contain it.
void uncentered_update(const Metric& m, Vertex z, const std::vector<std::size_t>& ends,
                       const std::vector<double>& values, Field& out) {
  const auto order = m.by_distance(z);
  double best = -kInfinity;
  std::size_t stop = order.size();
  for (std::size_t g = ends.size(); g-- > 0;) {
    best = std::max(best, values[g]);
    const std::size_t start = g == 0 ? 0 : ends[g - 1];
    for (std::size_t k = start; k < stop; ++k) out[order[k]] = std::max(out[order[k]], best);
    stop = start;
  }
}

void require_size(const DirichletSpace& space, const Field& f, const char* what) {
  if (static_cast<std::size_t>(f.size()) != space.size()) {
    throw ValidationError(std::string(what) + ": field length does not match the space");
  }
}

void require_time_field(const DirichletSpace& space, const TimeField& F, const char* what) {
  if (static_cast<std::size_t>(F.slices.rows()) != space.size() ||
      static_cast<std::size_t>(F.slices.cols()) != F.grid.size()) {
    throw ValidationError(std::string(what) + ": time field shape does not match space and grid");
  }
}

double lgamma_ratio_pair(double li, double lj, double N, double power, double lgnum) {
  return N * (std::log(li) + std::log(lj)) - power * std::log(li + lj) + lgnum - 2.0 * std::lgamma(N);
}

// sqrt of the per-vertex quadratic form sum_ij A_xi K_ij A_xj.
Field quadratic_rows(const Eigen::MatrixXd& A, const Eigen::MatrixXd& K) {
  const Eigen::MatrixXd AK = A * K;
  return AK.cwiseProduct(A).rowwise().sum();
}

double lp_time(const DirichletSpace& space, const Eigen::VectorXd& squared, double p) {
  return lp_norm(Eigen::VectorXd(squared.cwiseMax(0.0).cwiseSqrt()), space.measure(), p);
}

Eigen::VectorXd weighted_square_sum(const TimeField& F) {
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(F.grid.weights.data(),
                                                        static_cast<Eigen::Index>(F.grid.size()));
  return F.slices.cwiseAbs2() * w;
}

}  // namespace

TimeField q_slices(const SpectralData& spec, const ScaleGrid& grid, double N, const Field& f) {
  TimeField F;
  F.grid = grid;
  F.slices = spectral_slices(spec, grid, spec.coefficients(f), [N](double x) { return q_symbol(x, N); });
  return F;
}

Field maximal(const DirichletSpace& space, const Field& f, double q) {
  require_size(space, f, "maximal");
  if (!(q >= 1.0)) throw ValidationError("maximal: q must be >= 1");
  const Eigen::Index n = f.size();
  if (std::isinf(q)) return Field::Constant(n, f.cwiseAbs().maxCoeff());
  const Metric& m = space.metric();
  const auto& mu = space.measure();
  Field out = Field::Zero(n);
  std::vector<double> values;
  for (Vertex z = 0; z < space.size(); ++z) {
    const auto order = m.by_distance(z);
    const auto ends = ball_ends(m, z);
    values.assign(ends.size(), 0.0);
    double mass = 0.0, vol = 0.0;
    std::size_t k = 0;
    for (std::size_t g = 0; g < ends.size(); ++g) {
      for (; k < ends[g]; ++k) {
        mass += mu[order[k]] * std::pow(std::abs(f[order[k]]), q);
        vol += mu[order[k]];
      }
      values[g] = mass / vol;
    }
    uncentered_update(m, z, ends, values, out);
  }
  return out.array().pow(1.0 / q).matrix();
}

Field horizontal_square(const SpectralData& spec, double N, const Field& f) {
  if (!(N > 0.0)) throw ValidationError("horizontal_square: N must be positive");
  const Eigen::Index n = spec.eigenvalues.size();
  const auto null = static_cast<Eigen::Index>(spec.nullspace_dim);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  const double lg = std::lgamma(2.0 * N);
  for (Eigen::Index i = null; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      K(i, j) = K(j, i) = std::exp(lgamma_ratio_pair(spec.eigenvalues[i], spec.eigenvalues[j], N, 2.0 * N, lg));
    }
  }
  const Eigen::MatrixXd A = spec.eigenfields * spec.coefficients(f).asDiagonal();
  return quadratic_rows(A, K).cwiseMax(0.0).cwiseSqrt();
}

Field horizontal_square_alpha(const SpectralData& spec, const ScaleGrid& grid, double N, double alpha,
                              const Field& f) {
  if (!(alpha > 0.0)) throw ValidationError("horizontal_square_alpha: alpha must be positive");
  if (!(N > 0.0)) throw ValidationError("horizontal_square_alpha: N must be positive");
  const Eigen::VectorXd c = spec.coefficients(f);
  const Eigen::MatrixXd S = spectral_slices(spec, grid, c, [N, alpha](double x) {
    return x == 0.0 ? 0.0 : std::pow(x, alpha) * p_symbol(x, N);
  });
  TimeField F{grid, S};
  Eigen::VectorXd sq = weighted_square_sum(F);
  // Below t_min, P_t ~ Id: int_0^{t_min} |(tL)^alpha f|^2 dt/t = t_min^{2 alpha} |L^alpha f|^2 / (2 alpha).
  const Field la = fractional_power(spec, alpha, f);
  sq += std::pow(grid.t_min, 2.0 * alpha) / (2.0 * alpha) * la.cwiseAbs2();
  return sq.cwiseMax(0.0).cwiseSqrt();
}

Field vertical_square(const DirichletSpace& space, const SpectralData& spec, const ScaleGrid& grid, double N,
                      const Field& f, VerticalVariant variant) {
  require_size(space, f, "vertical_square");
  if (!(N > 0.0)) throw ValidationError("vertical_square: N must be positive");
  const auto& edges = space.edges();
  const auto ne = static_cast<Eigen::Index>(edges.size());
  const Eigen::VectorXd c = spec.coefficients(f);
  Eigen::VectorXd per_edge(ne);

  if (variant == VerticalVariant::G_tilde) {
    const Eigen::Index n = spec.eigenvalues.size();
    const auto null = static_cast<Eigen::Index>(spec.nullspace_dim);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    const double lg = std::lgamma(2.0 * N + 1.0);
    for (Eigen::Index i = null; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        K(i, j) = K(j, i) =
            std::exp(lgamma_ratio_pair(spec.eigenvalues[i], spec.eigenvalues[j], N, 2.0 * N + 1.0, lg));
      }
    }
    Eigen::MatrixXd D(ne, n);
    for (Eigen::Index e = 0; e < ne; ++e) {
      const auto& ed = edges[static_cast<std::size_t>(e)];
      D.row(e) = (spec.eigenfields.row(static_cast<Eigen::Index>(ed.u)) -
                  spec.eigenfields.row(static_cast<Eigen::Index>(ed.v)))
                     .cwiseProduct(c.transpose());
    }
    per_edge = quadratic_rows(D, K);
  } else {
    const Eigen::MatrixXd S = spectral_slices(spec, grid, c, [N](double x) { return p_symbol(x, N); });
    Eigen::VectorXd tw(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j) tw[static_cast<Eigen::Index>(j)] = grid.nodes[j] * grid.weights[j];
    for (Eigen::Index e = 0; e < ne; ++e) {
      const auto& ed = edges[static_cast<std::size_t>(e)];
      const Eigen::RowVectorXd d = S.row(static_cast<Eigen::Index>(ed.u)) - S.row(static_cast<Eigen::Index>(ed.v));
      // Below t_min, P_t f ~ f and int_0^{t_min} t dt/t = t_min.
      const double df = f[static_cast<Eigen::Index>(ed.u)] - f[static_cast<Eigen::Index>(ed.v)];
      per_edge[e] = d.cwiseAbs2().dot(tw.transpose()) + grid.t_min * df * df;
    }
  }

  Field out = Field::Zero(static_cast<Eigen::Index>(space.size()));
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto& ed = edges[static_cast<std::size_t>(e)];
    const double v = ed.weight * per_edge[e];
    out[static_cast<Eigen::Index>(ed.u)] += v;
    out[static_cast<Eigen::Index>(ed.v)] += v;
  }
  out = (0.5 * out).cwiseQuotient(space.measure());
  return out.cwiseMax(0.0).cwiseSqrt();
}

Field conical_square(const DirichletSpace& space, const SpectralData& spec, const ScaleGrid& grid, double N,
                     const Field& f) {
  require_size(space, f, "conical_square");
  const Metric& m = space.metric();
  const auto& mu = space.measure();
  const TimeField F = q_slices(spec, grid, N, f);
  const std::size_t n = space.size(), nodes = grid.size();
  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nodes));
  for (std::size_t j = 0; j < nodes; ++j) {
    const double r = std::sqrt(grid.nodes[j]);
    for (std::size_t y = 0; y < n; ++y) {
      const auto yi = static_cast<Eigen::Index>(y), ji = static_cast<Eigen::Index>(j);
      A(yi, ji) = F.slices(yi, ji) * F.slices(yi, ji) * grid.weights[j] * mu[yi] / m.volume(y, r);
    }
  }
  const Eigen::VectorXd totals = A.colwise().sum().transpose();
  Field out = Field::Zero(static_cast<Eigen::Index>(n));
  for (Vertex x = 0; x < n; ++x) {
    const auto order = m.by_distance(x);
    double acc = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      const auto ji = static_cast<Eigen::Index>(j);
      const std::size_t k = m.ball_size(x, std::sqrt(grid.nodes[j]));
      if (k == n) {
        acc += totals[ji];
        continue;
      }
      for (std::size_t i = 0; i < k; ++i) acc += A(order[i], ji);
    }
    out[static_cast<Eigen::Index>(x)] = std::sqrt(acc);
  }
  return out;
}

namespace {

double prefix_oscillation(const std::span<const std::uint32_t>& order, std::size_t k, const Field& f,
                          const Eigen::VectorXd& mu, double rho, double centre_value, bool pointwise) {
  double vol = 0.0, avg = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    vol += mu[order[i]];
    avg += mu[order[i]] * f[order[i]];
  }
  avg /= vol;
  const double ref = pointwise ? centre_value : avg;
  if (std::isinf(rho)) {
    double dev = 0.0;
    for (std::size_t i = 0; i < k; ++i) dev = std::max(dev, std::abs(f[order[i]] - ref));
    return dev;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += mu[order[i]] * std::pow(std::abs(f[order[i]] - ref), rho);
  return std::pow(acc / vol, 1.0 / rho);
}

}  // namespace

double oscillation(const DirichletSpace& space, const Ball& b, const Field& f, double rho) {
  require_size(space, f, "oscillation");
  if (!(rho >= 1.0)) throw ValidationError("oscillation: rho must be >= 1");
  if (b.members.empty()) throw ValidationError("oscillation: empty ball");
  const auto& mu = space.measure();
  std::vector<std::uint32_t> idx(b.members.begin(), b.members.end());
  return prefix_oscillation(std::span<const std::uint32_t>(idx), idx.size(), f, mu, rho, 0.0, false);
}

Field s_alpha(const DirichletSpace& space, const Field& f, double alpha, double rho, const SAlphaOptions& options) {
  require_size(space, f, "s_alpha");
  if (!(alpha > 0.0)) throw ValidationError("s_alpha: alpha must be positive");
  if (!(rho >= 1.0)) throw ValidationError("s_alpha: rho must be >= 1");
  const Metric& m = space.metric();
  const auto& mu = space.measure();
  const double diam = m.diameter();
  const std::size_t n = space.size();
  if (n == 1) return Field::Zero(1);

  std::vector<double> radii = options.radii;
  if (radii.empty()) {
    const double lo = std::min(space.mesh(), diam);
    const double span = std::log10(diam / lo);
    const int count = static_cast<int>(std::ceil(options.points_per_decade * span - 1e-9));
    if (count <= 0) {
      radii = {diam};
    } else {
      for (int k = 0; k <= count; ++k) radii.push_back(lo * std::pow(diam / lo, static_cast<double>(k) / count));
    }
  } else {
    std::sort(radii.begin(), radii.end());
    std::erase_if(radii, [diam](double r) { return !(r > 0.0) || r > diam * (1.0 + 1e-12); });
    if (radii.empty()) throw ValidationError("s_alpha: no radius inside (0, diameter]");
  }
  const double r_top = radii.back();

  Field out(static_cast<Eigen::Index>(n));
  std::vector<double> integrand(radii.size());
  for (Vertex x = 0; x < n; ++x) {
    const auto order = m.by_distance(x);
    const double fx = f[static_cast<Eigen::Index>(x)];
    for (std::size_t k = 0; k < radii.size(); ++k) {
      const std::size_t size = m.ball_size(x, radii[k]);
      const double osc = prefix_oscillation(order, size, f, mu, rho, fx, options.pointwise);
      integrand[k] = std::pow(radii[k], -2.0 * alpha) * osc * osc;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
      acc += 0.5 * (integrand[k] + integrand[k + 1]) * std::log(radii[k + 1] / radii[k]);
    }
    // Beyond the last radius the ball is fixed, so the tail integrates exactly.
    const std::size_t size = m.ball_size(x, r_top);
    const double osc_top = prefix_oscillation(order, size, f, mu, rho, fx, options.pointwise);
    acc += osc_top * osc_top * std::pow(r_top, -2.0 * alpha) / (2.0 * alpha);
    out[static_cast<Eigen::Index>(x)] = std::sqrt(acc);
  }
  return out;
}

Field carleson_function(const DirichletSpace& space, const TimeField& F, double p) {
  require_time_field(space, F, "carleson");
  if (!(p >= 1.0) || std::isinf(p)) throw ValidationError("carleson: p must be finite and >= 1");
  const Metric& m = space.metric();
  const auto& mu = space.measure();
  const std::size_t n = space.size(), nodes = F.grid.size();
  // H(y, J) = sum_{j < J} w_j |F(y, t_j)|^2
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nodes + 1));
  for (std::size_t j = 0; j < nodes; ++j) {
    const auto ji = static_cast<Eigen::Index>(j);
    H.col(ji + 1) = H.col(ji) + F.grid.weights[j] * F.slices.col(ji).cwiseAbs2();
  }
  Field out = Field::Constant(static_cast<Eigen::Index>(n), 0.0);
  std::vector<double> values;
  for (Vertex z = 0; z < n; ++z) {
    const auto order = m.by_distance(z);
    const auto dist = m.sorted_distances(z);
    const auto ends = ball_ends(m, z);
    values.assign(ends.size(), 0.0);
    for (std::size_t g = 0; g < ends.size(); ++g) {
      const std::size_t k = ends[g];
      const double r2 = dist[k - 1] * dist[k - 1];
      // The whole space is a ball of every radius beyond the eccentricity, so its box is unbounded in t.
      const std::size_t J = k == n ? nodes
                                   : static_cast<std::size_t>(std::upper_bound(F.grid.nodes.begin(),
                                                                               F.grid.nodes.end(), r2 * (1 + 1e-12)) -
                                                              F.grid.nodes.begin());
      double vol = 0.0, acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        vol += mu[order[i]];
        acc += mu[order[i]] * std::pow(H(order[i], static_cast<Eigen::Index>(J)), 0.5 * p);
      }
      values[g] = std::pow(acc / vol, 1.0 / p);
    }
    uncentered_update(m, z, ends, values, out);
  }
  return out;
}

double carleson(const DirichletSpace& space, const TimeField& F, double p) {
  return carleson_function(space, F, p).maxCoeff();
}

Field nontangential_max(const DirichletSpace& space, const TimeField& F) {
  require_time_field(space, F, "nontangential_max");
  const Metric& m = space.metric();
  const std::size_t n = space.size();
  const Eigen::MatrixXd absF = F.slices.cwiseAbs();
  const Eigen::VectorXd colmax = absF.colwise().maxCoeff().transpose();
  Field out = Field::Zero(static_cast<Eigen::Index>(n));
  for (Vertex x = 0; x < n; ++x) {
    const auto order = m.by_distance(x);
    double best = 0.0;
    for (std::size_t j = 0; j < F.grid.size(); ++j) {
      const auto ji = static_cast<Eigen::Index>(j);
      const std::size_t k = m.ball_size(x, std::sqrt(F.grid.nodes[j]));
      if (k == n) {
        best = std::max(best, colmax[ji]);
        continue;
      }
      for (std::size_t i = 0; i < k; ++i) best = std::max(best, absF(order[i], ji));
    }
    out[static_cast<Eigen::Index>(x)] = best;
  }
  return out;
}

double carleson_duality_ratio(const DirichletSpace& space, const TimeField& F, const TimeField& G, double p,
                              double eps) {
  require_time_field(space, F, "carleson_duality");
  require_time_field(space, G, "carleson_duality");
  TimeField FG{F.grid, F.slices.cwiseProduct(G.slices)};
  const double lhs = square_norm(space, FG, p);
  const double rhs = lp_norm(nontangential_max(space, F), space.measure(), p) * carleson(space, G, p + eps);
  return rhs > 0.0 ? lhs / rhs : 0.0;
}

double square_norm(const DirichletSpace& space, const TimeField& F, double p) {
  require_time_field(space, F, "square_norm");
  return lp_time(space, weighted_square_sum(F), p);
}

RatioSummary summarize(std::vector<double> ratios) {
  RatioSummary s;
  s.ratios = std::move(ratios);
  if (s.ratios.empty()) return s;
  s.max = *std::max_element(s.ratios.begin(), s.ratios.end());
  s.min = *std::min_element(s.ratios.begin(), s.ratios.end());
  s.median = median(s.ratios);
  return s;
}

RatioSummary fefferman_stein_check(const DirichletSpace& space, const std::vector<TimeField>& ensemble, double p,
                                   double q) {
  if (!(q >= 1.0) || !(q < std::min(p, 2.0))) throw ValidationError("fefferman_stein: need 1 <= q < min(p, 2)");
  std::vector<double> ratios;
  for (const TimeField& F : ensemble) {
    require_time_field(space, F, "fefferman_stein");
    TimeField MF{F.grid, Eigen::MatrixXd(F.slices.rows(), F.slices.cols())};
    for (Eigen::Index j = 0; j < F.slices.cols(); ++j) MF.slices.col(j) = maximal(space, F.slices.col(j), q);
    const double den = square_norm(space, F, p);
    if (den > 0.0) ratios.push_back(square_norm(space, MF, p) / den);
  }
  return summarize(std::move(ratios));
}

double orthogonality_ratio(const DirichletSpace& space, const SpectralData& spec, double N, const TimeField& F,
                           double p) {
  require_time_field(space, F, "orthogonality");
  const Eigen::MatrixXd C = spec.eigenfields.transpose() * spec.measure.asDiagonal() * F.slices;
  const Eigen::Index n = C.rows();
  Eigen::VectorXd sum_coeffs = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd tilde(n, C.cols());
  const double half_norm = std::exp(-0.5 * std::lgamma(N));
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    const double t = F.grid.nodes[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = t * spec.eigenvalues[i];
      sum_coeffs[i] += F.grid.weights[static_cast<std::size_t>(j)] * q_symbol(x, N) * C(i, j);
      tilde(i, j) = (x == 0.0 ? 0.0 : std::exp(0.5 * N * std::log(x) - 0.5 * x) * half_norm) * C(i, j);
    }
  }
  const double lhs = lp_norm(spec.synthesize(sum_coeffs), space.measure(), p);
  const TimeField QF{F.grid, spec.eigenfields * tilde};
  const double rhs = square_norm(space, QF, p);
  return rhs > 0.0 ? lhs / rhs : 0.0;
}

}  // namespace dircalc
