#include "dircalc/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "dircalc/errors.hpp"
#include "dircalc/numerics.hpp"
#include "dircalc/special.hpp"

namespace dircalc {

using nlohmann::json;

namespace {

std::vector<double> geometric(double lo, double hi, int count) {
  std::vector<double> out;
  if (count <= 1 || !(hi > lo)) return {lo};
  for (int k = 0; k < count; ++k) out.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1)));
  return out;
}

std::vector<Vertex> strided(std::size_t n, std::size_t count) {
  std::vector<Vertex> out;
  const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, count));
  for (Vertex v = 0; v < n && out.size() < count; v += stride) out.push_back(v);
  return out;
}

// Vertex-form operator rows for the given multiplier, restricted to `rows`.
Eigen::MatrixXd operator_rows(const SpectralData& spec, const Eigen::VectorXd& m, const std::vector<Vertex>& rows) {
  Eigen::MatrixXd Er(static_cast<Eigen::Index>(rows.size()), spec.eigenfields.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) Er.row(static_cast<Eigen::Index>(i)) = spec.eigenfields.row(static_cast<Eigen::Index>(rows[i]));
  return Er * m.asDiagonal() * spec.eigenfields.transpose() * spec.measure.asDiagonal();
}

// |grad u|(x) for every column u of U.
Eigen::MatrixXd gradient_columns(const DirichletSpace& space, const Eigen::MatrixXd& U) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(U.rows(), U.cols());
  for (const Edge& e : space.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u), v = static_cast<Eigen::Index>(e.v);
    const Eigen::RowVectorXd d2 = e.weight * (U.row(u) - U.row(v)).cwiseAbs2();
    G.row(u) += d2;
    G.row(v) += d2;
  }
  for (Eigen::Index x = 0; x < G.rows(); ++x) G.row(x) /= 2.0 * space.measure()[x];
  return G.cwiseMax(0.0).cwiseSqrt();
}

double lp_column(const Eigen::VectorXd& mu, const Eigen::VectorXd& v, double p) { return lp_norm(v, mu, p); }

ProbeFit fit_from(const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> x, y;
  for (const auto& [a, b] : pts) {
    x.push_back(a);
    y.push_back(b);
  }
  const LinearFit lf = fit_line(x, y);
  ProbeFit f;
  f.exponent = lf.slope;
  f.constant = std::exp(lf.intercept);
  f.residual = lf.max_residual;
  f.r_squared = lf.r_squared;
  return f;
}

void require_times(const DirichletSpace& space, const std::vector<double>& times, double lo, double hi) {
  for (double t : times) {
    if (!(t >= lo * (1 - 1e-12)) || !(t <= hi * (1 + 1e-12))) {
      std::ostringstream msg;
      msg << "time " << t << " outside the validity window [" << lo << ", " << hi << "] for " << space.kind();
      throw ValidationError(msg.str());
    }
  }
}


}  // namespace

json to_json(const ProbeReport& r) {
  json pts = json::array();
  for (const auto& [x, y] : r.points) pts.push_back({x, y});
  json samples = r.samples;
  samples["points"] = pts;
  return json{{"tag", r.tag},
              {"params", r.params},
              {"fit",
               {{"exponent", r.fit.exponent},
                {"constant", r.fit.constant},
                {"residual", r.fit.residual},
                {"r_squared", r.fit.r_squared}}},
              {"samples", samples},
              {"seed", r.seed},
              {"diagnostics", r.diagnostics}};
}

std::string points_csv(const ProbeReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "x,y\n";
  for (const auto& [x, y] : r.points) out << x << ',' << y << '\n';
  return out.str();
}

const std::vector<std::string>& hypothesis_tags() {
  static const std::vector<std::string> tags{"VD",  "DUE", "UE", "Gp",      "Rp",        "RRp",     "Ep",
                                             "Pp",  "DG2", "H",  "Hbar",    "Ahlfors",   "ImagPower",
                                             "OffDiag", "KernelDecay"};
  return tags;
}

ProbeReport doubling_probe(const DirichletSpace& space, std::vector<double> radii) {
  if (radii.empty()) {
    const double diam = space.metric().diameter();
    radii = geometric(space.mesh(), std::max(2.0 * space.mesh(), diam / 4.0), 6);
  }
  const DoublingFit d = doubling_fit(space, radii);
  ProbeReport r;
  r.tag = "VD";
  r.params = {{"radii", d.radii}};
  r.fit = {d.nu, d.constant, d.max_residual, 1.0};
  r.samples = {{"radii", d.radii}, {"centers", space.size()}};
  r.diagnostics = {{"mean_nu", d.mean_nu}};
  return r;
}

ProbeReport due_ue_probe(const DirichletSpace& space, const SpectralData& spec, std::vector<double> times,
                         const std::string& tag, double m) {
  if (!(m > 1.0)) throw ValidationError("UE probe: exponent m must exceed 1");
  const Metric& metric = space.metric();
  const double h = space.mesh(), diam = metric.diameter();
  if (times.empty()) times = geometric(4.0 * h * h, std::max(4.0 * h * h, diam * diam / 16.0), 8);
  require_times(space, times, h * h, std::max(h * h, diam * diam));
  const std::vector<Vertex> sources = strided(space.size(), 16);

  ProbeReport r;
  r.tag = tag;
  r.params = {{"m", m}};
  r.samples = {{"times", times}, {"sources", sources}};
  double due = 0.0;
  json table = json::array();
  for (double t : times) {
    const double rt = std::sqrt(t);
    const Eigen::MatrixXd K = operator_rows(spec, (-t * spec.eigenvalues).array().exp().matrix(), sources) *
                              spec.measure.cwiseInverse().asDiagonal();
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const Vertex x = sources[i];
      const double vx = metric.volume(x, rt);
      for (Vertex y = 0; y < space.size(); ++y) {
        const double p = K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(y));
        due = std::max(due, p * std::sqrt(vx * metric.volume(y, rt)));
        const double d = metric.distance(x, y);
        if (space.size() <= 8) table.push_back({t, x, y, d, p});
        if (d >= rt && p > 0.0) {
          r.points.emplace_back(std::pow(std::pow(d, m) / t, 1.0 / (m - 1.0)), std::log(p * vx));
        }
      }
    }
  }
  r.diagnostics["due_constant"] = due;
  if (!table.empty()) r.diagnostics["kernel_table"] = table;
  if (tag == "DUE") {
    r.fit = {0.0, due, 0.0, 1.0};
    return r;
  }
  if (r.points.size() < 2) {
    r.fit = {m, 0.0, 0.0, 0.0};
    r.diagnostics["note"] = "fewer than two pairs with d >= sqrt(t)";
    return r;
  }
  const ProbeFit lf = fit_from(r.points);
  r.fit.exponent = m;
  r.fit.constant = lf.exponent < 0.0 ? std::pow(-lf.exponent, -(m - 1.0)) : kInfinity;
  r.fit.residual = lf.residual;
  r.fit.r_squared = lf.r_squared;
  r.diagnostics["slope"] = lf.exponent;
  return r;
}

ProbeReport gradient_bound_probe(const DirichletSpace& space, const SpectralData& spec, double p,
                                 std::vector<double> times, std::uint64_t seed) {
  if (!(p >= 1.0)) throw ValidationError("Gp probe: p must be >= 1");
  const double h = space.mesh(), diam = space.metric().diameter();
  if (times.empty()) times = geometric(h * h, std::max(h * h, diam * diam), 9);
  ProbeReport r;
  r.tag = "Gp";
  r.params = {{"p", std::isinf(p) ? json("inf") : json(p)}};
  r.seed = seed;
  r.samples = {{"times", times}};
  const auto& mu = spec.measure;

  if (p == 2.0) {
    // ||sqrt(t)|grad e^{-tL}|||_{2->2}^2 = sup_lambda t lambda e^{-2 t lambda}; maximize in t per eigenvalue.
    double best = 0.0, on_grid = 0.0;
    for (Eigen::Index i = spec.nullspace_dim; i < spec.eigenvalues.size(); ++i) {
      const double lam = spec.eigenvalues[i];
      const double ts = 0.5 / lam;
      best = std::max(best, ts * lam * std::exp(-2.0 * ts * lam));
      for (double t : times) on_grid = std::max(on_grid, t * lam * std::exp(-2.0 * t * lam));
    }
    r.fit = {0.0, std::sqrt(best), 0.0, 1.0};
    r.diagnostics = {{"exact", true}, {"sup_on_times", std::sqrt(on_grid)}};
    return r;
  }

  double lower = 0.0, upper = 0.0;
  bool exact = false;
  std::vector<Vertex> all(space.size());
  for (Vertex v = 0; v < space.size(); ++v) all[v] = v;
  for (double t : times) {
    const Eigen::MatrixXd T = operator_rows(spec, (-t * spec.eigenvalues).array().exp().matrix(), all);
    double val_lo = 0.0, val_hi = 0.0;
    if (p == 1.0) {
      // Extreme points of the L^1 ball: u = T(delta_y / mu(y)) = p_t(., y).
      const Eigen::MatrixXd G = gradient_columns(space, T * mu.cwiseInverse().asDiagonal());
      for (Eigen::Index y = 0; y < G.cols(); ++y) val_lo = std::max(val_lo, lp_column(mu, G.col(y), 1.0));
      val_hi = val_lo;
      exact = true;
    } else if (std::isinf(p)) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal;
      for (Vertex x = 0; x < space.size(); ++x) {
        const auto nb = space.neighbors(x);
        Eigen::MatrixXd A(static_cast<Eigen::Index>(nb.size()), T.cols());
        for (std::size_t k = 0; k < nb.size(); ++k) {
          A.row(static_cast<Eigen::Index>(k)) = std::sqrt(nb[k].weight / (2.0 * mu[static_cast<Eigen::Index>(x)])) *
                                                (T.row(static_cast<Eigen::Index>(x)) - T.row(static_cast<Eigen::Index>(nb[k].vertex)));
        }
        double bound = 0.0;
        for (Eigen::Index k = 0; k < A.rows(); ++k) bound += std::pow(A.row(k).cwiseAbs().sum(), 2);
        val_hi = std::max(val_hi, std::sqrt(bound));
        // max ||A f||_2 over the cube equals max over unit u of ||A^T u||_1; sign ascent from several starts.
        const Eigen::Index starts = A.rows() + 2;
        for (Eigen::Index s = 0; s < starts; ++s) {
          Eigen::VectorXd u(A.rows());
          if (s < A.rows()) {
            u.setZero();
            u[s] = 1.0;
          } else {
            for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = normal(rng);
          }
          double prev = -1.0;
          for (int it = 0; it < 50; ++it) {
            const Eigen::VectorXd f = (A.transpose() * u).unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
            const Eigen::VectorXd Af = A * f;
            const double val = Af.norm();
            val_lo = std::max(val_lo, val);
            if (!(val > prev * (1.0 + 1e-14)) || val == 0.0) break;
            prev = val;
            u = Af / val;
          }
        }
      }
    } else {
      EnsembleSpec e;
      e.count = 32;
      e.seed = seed;
      std::vector<Field> fields = make_ensemble(spec, e);
      for (Vertex y = 0; y < space.size(); y += std::max<std::size_t>(1, space.size() / 32)) {
        Field d = Field::Zero(static_cast<Eigen::Index>(space.size()));
        d[static_cast<Eigen::Index>(y)] = 1.0;
        fields.push_back(d);
      }
      for (const Field& f : fields) {
        const Eigen::MatrixXd G = gradient_columns(space, T * f);
        val_lo = std::max(val_lo, lp_column(mu, G.col(0), p) / lp_norm(f, mu, p));
      }
      val_hi = kInfinity;
    }
    lower = std::max(lower, std::sqrt(t) * val_lo);
    upper = std::max(upper, std::sqrt(t) * val_hi);
  }
  r.fit = {0.0, lower, 0.0, 1.0};
  r.diagnostics = {{"exact", exact}, {"lower", lower}, {"upper", std::isinf(upper) ? json(nullptr) : json(upper)}};

  // (mult): ||grad f||_p^2 / (||Lf||_p ||f||_p) over a band-limited ensemble.
  EnsembleSpec e;
  e.seed = seed;
  double mult = 0.0;
  for (const Field& f : make_ensemble(spec, e)) {
    const double num = std::pow(lp_norm(gradient_length(space, f), mu, p), 2);
    const double den = lp_norm(apply_generator(space, f), mu, p) * lp_norm(f, mu, p);
    if (den > 0.0) mult = std::max(mult, num / den);
  }
  r.diagnostics["mult_ratio"] = mult;
  return r;
}

ProbeReport riesz_probe(const DirichletSpace& space, const SpectralData& spec, double p, const EnsembleSpec& ensemble,
                        const std::string& tag) {
  if (!(p > 1.0) || std::isinf(p)) throw ValidationError("Riesz probe: p must lie in (1, inf)");
  const auto fields = make_ensemble(spec, ensemble);
  std::vector<double> ratios;
  for (const Field& f : fields) {
    const double den = lp_norm(fractional_power(spec, 0.5, f), spec.measure, p);
    const double num = lp_norm(gradient_length(space, f), spec.measure, p);
    if (den > 0.0 && num > 0.0) ratios.push_back(num / den);
  }
  if (ratios.empty()) throw ValidationError("Riesz probe: ensemble has no nonconstant field");
  const double R = *std::max_element(ratios.begin(), ratios.end());
  const double RR = 1.0 / *std::min_element(ratios.begin(), ratios.end());
  ProbeReport r;
  r.tag = tag;
  r.seed = ensemble.seed;
  r.params = {{"p", p}};
  r.samples = {{"ensemble", to_json(ensemble)}, {"count", ratios.size()}};
  r.fit = {0.0, tag == "RRp" ? RR : (tag == "Ep" ? std::max(R, RR) : R), 0.0, 1.0};
  r.diagnostics = {{"riesz", R}, {"reverse_riesz", RR}, {"ratios", ratios}};
  return r;
}

namespace {

struct BallForm {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd mu;
};

BallForm ball_form(const DirichletSpace& space, const std::vector<Vertex>& members) {
  std::map<Vertex, Eigen::Index> local;
  for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = static_cast<Eigen::Index>(i);
  const auto k = static_cast<Eigen::Index>(members.size());
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
  BallForm form;
  form.mu.resize(k);
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto li = static_cast<Eigen::Index>(i);
    form.mu[li] = space.measure()[static_cast<Eigen::Index>(members[i])];
    for (const Neighbor& nb : space.neighbors(members[i])) {
      const auto it = local.find(nb.vertex);
      if (it == local.end()) continue;
      diag[li] += nb.weight;
      trips.emplace_back(li, it->second, -nb.weight);
    }
  }
  for (Eigen::Index i = 0; i < k; ++i) trips.emplace_back(i, i, diag[i]);
  form.K.resize(k, k);
  form.K.setFromTriplets(trips.begin(), trips.end());
  return form;
}

double dense_neumann(const BallForm& form) {
  const Eigen::VectorXd isq = form.mu.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = isq.asDiagonal() * Eigen::MatrixXd(form.K) * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Poincare probe: ball eigensolver failed");
  return es.eigenvalues()[1];
}

// Block inverse iteration on the grounded form, with Rayleigh-Ritz in the mu-inner product.
double sparse_neumann(const BallForm& form) {
  const Eigen::Index k = form.mu.size();
  const Eigen::Index m = k - 1;
  Eigen::SparseMatrix<double> Kg = form.K.bottomRightCorner(m, m);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kg);
  if (ldlt.info() != Eigen::Success) throw NumericalError("Poincare probe: ball factorization failed");
  const double vol = form.mu.sum();
  auto center = [&](Eigen::MatrixXd& V) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) V.col(j).array() -= form.mu.dot(V.col(j)) / vol;
  };
  auto m_orthonormalize = [&](Eigen::MatrixXd& V) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) V.col(j) -= V.col(i).cwiseProduct(form.mu).dot(V.col(j)) * V.col(i);
      V.col(j) /= std::sqrt(V.col(j).cwiseProduct(form.mu).dot(V.col(j)));
    }
  };
  const Eigen::Index block = std::min<Eigen::Index>(4, m);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd V(k, block);
  for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = normal(rng);
  center(V);
  m_orthonormalize(V);
  double theta = kInfinity;
  for (int it = 0; it < 1000; ++it) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(k, block);
    const Eigen::MatrixXd rhs = form.mu.asDiagonal() * V;
    W.bottomRows(m) = ldlt.solve(rhs.bottomRows(m));
    center(W);
    m_orthonormalize(W);
    const Eigen::MatrixXd H = W.transpose() * (form.K * W);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    V = W * es.eigenvectors();
    const double next = es.eigenvalues()[0];
    if (std::abs(next - theta) <= 1e-13 * next) return next;
    theta = next;
  }
  return theta;
}

double ball_osc_p(const Field& f, const std::vector<Vertex>& members, const Eigen::VectorXd& mu, double p) {
  double vol = 0.0, avg = 0.0;
  for (Vertex v : members) {
    vol += mu[static_cast<Eigen::Index>(v)];
    avg += mu[static_cast<Eigen::Index>(v)] * f[static_cast<Eigen::Index>(v)];
  }
  avg /= vol;
  double acc = 0.0;
  for (Vertex v : members) acc += mu[static_cast<Eigen::Index>(v)] * std::pow(std::abs(f[static_cast<Eigen::Index>(v)] - avg), p);
  return std::pow(acc / vol, 1.0 / p);
}

}  // namespace

double ball_neumann_eigenvalue(const DirichletSpace& space, const std::vector<Vertex>& members) {
  if (members.size() < 2) throw ValidationError("ball Neumann eigenvalue: ball has a single vertex");
  const BallForm form = ball_form(space, members);
  return members.size() <= 400 ? dense_neumann(form) : sparse_neumann(form);
}

ProbeReport poincare_probe(const DirichletSpace& space, double p, std::vector<double> radii, std::vector<Vertex> centers,
                           const SpectralData* spec, const EnsembleSpec& ensemble) {
  if (!(p >= 1.0) || std::isinf(p)) throw ValidationError("Poincare probe: p must lie in [1, inf)");
  const Metric& metric = space.metric();
  const double h = space.mesh(), diam = metric.diameter();
  if (radii.empty()) radii = geometric(2.0 * h, std::max(2.0 * h, diam), 6);
  if (centers.empty()) centers = strided(space.size(), 16);
  for (Vertex c : centers) {
    if (c >= space.size()) throw ValidationError("Poincare probe: center out of range");
  }
  std::vector<Field> fields;
  if (p != 2.0) {
    if (!spec) throw ValidationError("Poincare probe: p != 2 needs spectral data for the ensemble");
    fields = make_ensemble(*spec, ensemble);
  }
  ProbeReport r;
  r.tag = "Pp";
  r.params = {{"p", p}};
  r.seed = ensemble.seed;
  r.samples = {{"radii", radii}, {"centers", centers}};
  double best = 0.0;
  json worst;
  std::size_t balls = 0, skipped = 0;
  const auto& mu = space.measure();
  for (Vertex c : centers) {
    for (double rad : radii) {
      const Ball b = ball(space, c, rad);
      if (b.members.size() < 2) {
        ++skipped;
        continue;
      }
      ++balls;
      double C = 0.0;
      if (p == 2.0) {
        C = 1.0 / std::sqrt(rad * rad * ball_neumann_eigenvalue(space, b.members));
      } else {
        const BallForm form = ball_form(space, b.members);
        for (const Field& f : fields) {
          Eigen::VectorXd fb(static_cast<Eigen::Index>(b.members.size()));
          for (std::size_t i = 0; i < b.members.size(); ++i) fb[static_cast<Eigen::Index>(i)] = f[static_cast<Eigen::Index>(b.members[i])];
          // |grad_B f|^2(x) = (2 mu(x))^{-1} sum_{y in B} w (f(x)-f(y))^2
          Eigen::VectorXd g2 = Eigen::VectorXd::Zero(fb.size());
          for (int o = 0; o < form.K.outerSize(); ++o) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(form.K, o); it; ++it) {
              if (it.row() == it.col()) continue;
              const double d = fb[it.row()] - fb[it.col()];
              g2[it.row()] += -it.value() * d * d;
            }
          }
          g2 = (0.5 * g2).cwiseQuotient(form.mu);
          double avg = 0.0;
          for (Eigen::Index i = 0; i < g2.size(); ++i) avg += form.mu[i] * std::pow(std::sqrt(g2[i]), p);
          const double rhs = rad * std::pow(avg / form.mu.sum(), 1.0 / p);
          const double lhs = ball_osc_p(f, b.members, mu, p);
          if (rhs > 0.0) C = std::max(C, lhs / rhs);
        }
      }
      r.points.emplace_back(std::log(rad), std::log(std::max(C, 1e-300)));
      if (C > best) {
        best = C;
        worst = {{"center", c}, {"radius", rad}, {"size", b.members.size()}};
      }
    }
  }
  if (balls == 0) throw ValidationError("Poincare probe: every sampled ball has a single vertex");
  const ProbeFit lf = fit_from(r.points);
  r.fit = {lf.exponent, best, lf.residual, lf.r_squared};
  r.diagnostics = {{"worst_ball", worst}, {"balls", balls}, {"skipped_single_vertex", skipped},
                   {"exact", p == 2.0}};
  return r;
}

ProbeReport degiorgi_probe(const DirichletSpace& space, const SpectralData& spec, std::vector<double> radii,
                           std::vector<Vertex> centers, const EnsembleSpec& ensemble) {
  const Metric& metric = space.metric();
  const double h = space.mesh(), diam = metric.diameter();
  if (radii.empty()) radii = geometric(h, std::max(h, diam / 4.0), 5);
  std::sort(radii.begin(), radii.end());
  if (centers.empty()) centers = strided(space.size(), 8);
  const auto fields = make_ensemble(spec, ensemble);
  const auto& mu = space.measure();
  std::map<double, double> best;  // log(R/r) -> max ratio
  for (const Field& f : fields) {
    const Field g2 = carre_du_champ(space, f, f);
    const Field Lf = apply_generator(space, f).cwiseAbs();
    for (Vertex c : centers) {
      std::vector<double> grad_avg(radii.size()), lf_max(radii.size());
      for (std::size_t k = 0; k < radii.size(); ++k) {
        const Ball b = ball(space, c, radii[k]);
        double acc = 0.0, lmax = 0.0;
        for (Vertex v : b.members) {
          acc += mu[static_cast<Eigen::Index>(v)] * g2[static_cast<Eigen::Index>(v)];
          lmax = std::max(lmax, Lf[static_cast<Eigen::Index>(v)]);
        }
        grad_avg[k] = std::sqrt(acc / b.volume);
        lf_max[k] = lmax;
      }
      for (std::size_t i = 0; i < radii.size(); ++i) {
        for (std::size_t j = i; j < radii.size(); ++j) {
          const double rhs = grad_avg[j] + radii[j] * lf_max[j];
          if (!(rhs > 0.0)) continue;
          const double key = std::round(std::log(radii[j] / radii[i]) * 1e9) / 1e9;
          best[key] = std::max(best[key], grad_avg[i] / rhs);
        }
      }
    }
  }
  if (best.size() < 2) throw ValidationError("DG probe: insufficient concentric pairs");
  ProbeReport r;
  r.tag = "DG2";
  r.seed = ensemble.seed;
  r.samples = {{"radii", radii}, {"centers", centers}, {"ensemble", to_json(ensemble)}};
  for (const auto& [x, y] : best) {
    if (y > 0.0) r.points.emplace_back(x, std::log(y));
  }
  const ProbeFit lf = fit_from(r.points);
  // Smallest kappa with every point under C0 (R/r)^kappa, C0 the r = R anchor.
  const double anchor = best.begin()->second;
  double envelope = 0.0;
  for (const auto& [x, y] : best) {
    if (x > 0.0 && y > 0.0) envelope = std::max(envelope, std::log(y / anchor) / x);
  }
  r.fit = {lf.exponent, anchor, lf.residual, lf.r_squared};
  r.diagnostics = {{"kappa_envelope", envelope}, {"kappa_regression", lf.exponent}};
  return r;
}

ProbeReport holder_probe(const DirichletSpace& space, const SpectralData& spec, double p, double q,
                         std::vector<double> times, std::vector<Vertex> centers, HolderVariant variant,
                         const EnsembleSpec& ensemble) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw ValidationError("Holder probe: p, q must be >= 1");
  const Metric& metric = space.metric();
  const double h = space.mesh(), diam = metric.diameter();
  if (times.empty()) {
    for (double m : {4.0, 8.0}) {
      if (m * h <= 0.5 * diam) times.push_back(m * m * h * h);
    }
    if (times.empty()) times = {diam * diam / 4.0};
  }
  if (centers.empty()) centers = strided(space.size(), 4);
  const auto& mu = space.measure();
  const std::size_t n = space.size();
  std::vector<Vertex> all(n);
  for (Vertex v = 0; v < n; ++v) all[v] = v;
  const bool exact = p == 1.0 || (variant == HolderVariant::H && ((p == 2.0 && (q == 2.0 || std::isinf(q))) ||
                                                                   (std::isinf(p) && std::isinf(q))));
  std::vector<Field> fields;
  if (!exact) fields = make_ensemble(spec, ensemble);

  std::map<int, double> best;  // k -> sup ratio at r = sqrt(t) 2^{-k}
  std::map<int, double> xval;
  int common = std::numeric_limits<int>::max();  // deepest k resolved at every time
  for (double t : times) {
    int deepest = -1;
    const double rt = std::sqrt(t);
    const Eigen::MatrixXd T = operator_rows(spec, (-t * spec.eigenvalues).array().exp().matrix(), all);
    for (Vertex c : centers) {
      const double big = metric.volume(c, rt);
      // Hbar weights: sum_l 2^{-l} avg over 2^l B_sqrt(t).
      Eigen::VectorXd weight = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      std::vector<std::pair<double, Ball>> shells;
      if (variant == HolderVariant::Hbar) {
        double gamma = 1.0;
        for (int l = 0;; ++l) {
          Ball B = ball(space, c, rt * std::ldexp(1.0, l));
          const bool whole = B.members.size() == n;
          const double g = whole ? 2.0 * gamma : gamma;  // geometric tail once the ball is M
          for (Vertex v : B.members) weight[static_cast<Eigen::Index>(v)] += g / B.volume;
          shells.emplace_back(g, std::move(B));
          if (whole) break;
          gamma *= 0.5;
        }
      }
      auto rhs_of = [&](const Field& f) {
        if (variant == HolderVariant::H) return std::pow(big, -1.0 / p) * lp_norm(f, mu, p);
        double acc = 0.0;
        for (const auto& [g, B] : shells) {
          double a = 0.0;
          if (std::isinf(p)) {
            for (Vertex v : B.members) a = std::max(a, std::abs(f[static_cast<Eigen::Index>(v)]));
          } else {
            for (Vertex v : B.members) a += mu[static_cast<Eigen::Index>(v)] * std::pow(std::abs(f[static_cast<Eigen::Index>(v)]), p);
            a = std::pow(a / B.volume, 1.0 / p);
          }
          acc += g * a;
        }
        return acc;
      };
      for (int k = 0;; ++k) {
        const double rad = rt * std::ldexp(1.0, -k);
        if (rad < h * (1.0 - 1e-9)) break;
        const Ball b = ball(space, c, rad);
        if (b.members.size() < 2) break;
        const auto nb = static_cast<Eigen::Index>(b.members.size());
        Eigen::MatrixXd O(nb, T.cols());
        Eigen::VectorXd mb(nb);
        for (Eigen::Index i = 0; i < nb; ++i) {
          O.row(i) = T.row(static_cast<Eigen::Index>(b.members[static_cast<std::size_t>(i)]));
          mb[i] = mu[static_cast<Eigen::Index>(b.members[static_cast<std::size_t>(i)])];
        }
        const Eigen::RowVectorXd avg = (mb.transpose() * O) / b.volume;
        O.rowwise() -= avg;
        auto osc = [&](const Eigen::VectorXd& u) {
          if (std::isinf(q)) return u.cwiseAbs().maxCoeff();
          double acc = 0.0;
          for (Eigen::Index i = 0; i < nb; ++i) acc += mb[i] * std::pow(std::abs(u[i]), q);
          return std::pow(acc / b.volume, 1.0 / q);
        };
        double sup = 0.0;
        if (p == 1.0) {
          for (Eigen::Index z = 0; z < O.cols(); ++z) {
            Field e = Field::Zero(static_cast<Eigen::Index>(n));
            e[z] = 1.0;
            const double rhs = rhs_of(e);
            if (rhs > 0.0) sup = std::max(sup, osc(O.col(z)) / rhs);
          }
        } else if (exact && p == 2.0 && q == 2.0) {
          const Eigen::MatrixXd B2 = (mb / b.volume).cwiseSqrt().asDiagonal() * O * mu.cwiseSqrt().cwiseInverse().asDiagonal();
          sup = spectral_norm(B2) / std::pow(big, -0.5);
        } else if (exact && p == 2.0) {
          for (Eigen::Index i = 0; i < nb; ++i) {
            sup = std::max(sup, std::sqrt(O.row(i).cwiseAbs2().dot(mu.cwiseInverse().transpose())) / std::pow(big, -0.5));
          }
        } else if (exact) {
          sup = O.cwiseAbs().rowwise().sum().maxCoeff();
        } else {
          for (const Field& f : fields) {
            const double rhs = rhs_of(f);
            if (rhs > 0.0) sup = std::max(sup, osc(O * f) / rhs);
          }
        }
        if (sup > 0.0) {
          best[k] = std::max(best[k], sup);
          xval[k] = -k * std::log(2.0);
          deepest = std::max(deepest, k);
        }
      }
    }
    common = std::min(common, deepest);
  }
  std::erase_if(best, [common](const auto& kv) { return kv.first > common; });
  if (best.size() < 2) throw ValidationError("Holder probe: fewer than two usable radii (r must stay >= mesh)");
  ProbeReport r;
  r.tag = variant == HolderVariant::H ? "H" : "Hbar";
  r.seed = ensemble.seed;
  r.params = {{"p", std::isinf(p) ? json("inf") : json(p)}, {"q", std::isinf(q) ? json("inf") : json(q)}};
  r.samples = {{"times", times}, {"centers", centers}, {"exact", exact}};
  for (const auto& [k, v] : best) r.points.emplace_back(xval[k], std::log(v));
  const ProbeFit lf = fit_from(r.points);
  double C = 0.0;
  for (const auto& [x, y] : r.points) C = std::max(C, std::exp(y - lf.exponent * x));
  r.fit = {lf.exponent, C, lf.residual, lf.r_squared};
  return r;
}

OperatorFamily parse_family(const std::string& name) {
  static const std::map<std::string, OperatorFamily> table{
      {"heat", OperatorFamily::heat},       {"Q", OperatorFamily::Q},
      {"P", OperatorFamily::P},             {"R", OperatorFamily::R},
      {"grad_heat", OperatorFamily::grad_heat}, {"grad_Q", OperatorFamily::grad_Q},
      {"grad_P", OperatorFamily::grad_P},   {"kernel", OperatorFamily::kernel}};
  const auto it = table.find(name);
  if (it == table.end()) {
    throw ValidationError("unknown operator family '" + name + "' (valid: heat, Q, P, R, grad_heat, grad_Q, grad_P, kernel)");
  }
  return it->second;
}

std::string to_string(OperatorFamily family) {
  switch (family) {
    case OperatorFamily::heat: return "heat";
    case OperatorFamily::Q: return "Q";
    case OperatorFamily::P: return "P";
    case OperatorFamily::R: return "R";
    case OperatorFamily::grad_heat: return "grad_heat";
    case OperatorFamily::grad_Q: return "grad_Q";
    case OperatorFamily::grad_P: return "grad_P";
    case OperatorFamily::kernel: return "kernel";
  }
  return "heat";
}

ProbeReport offdiagonal_probe(const DirichletSpace& space, const SpectralData& spec, const OffDiagonalOptions& opt) {
  const Metric& metric = space.metric();
  const double t = opt.t > 0.0 ? opt.t : std::pow(4.0 * space.mesh(), 2);
  const double rt = std::sqrt(t);
  const std::size_t n = space.size();
  if (opt.anchor >= n) throw ValidationError("off-diagonal probe: anchor out of range");

  Eigen::MatrixXd A;
  bool gradient = false;
  switch (opt.family) {
    case OperatorFamily::heat:
    case OperatorFamily::grad_heat:
      A = spec.operator_matrix((-t * spec.eigenvalues).array().exp().matrix());
      break;
    case OperatorFamily::Q:
    case OperatorFamily::grad_Q:
      A = spec.operator_matrix(q_multiplier(spec, t, opt.N));
      break;
    case OperatorFamily::P:
    case OperatorFamily::grad_P:
      A = spec.operator_matrix(p_multiplier(spec, t, opt.N));
      break;
    case OperatorFamily::R:
      A = spec.operator_matrix(r_multiplier(spec, t, opt.N));
      break;
    case OperatorFamily::kernel:
      if (!opt.kernel || !opt.kernel_g) throw ValidationError("off-diagonal probe: kernel family needs config and g");
      A = kernel_vertex_matrix(spec, *opt.kernel, *opt.kernel_g, opt.kernel_ratio * t, t);
      break;
  }
  gradient = opt.family == OperatorFamily::grad_heat || opt.family == OperatorFamily::grad_Q ||
             opt.family == OperatorFamily::grad_P;
  if (gradient && !(opt.p == 2.0 && opt.q == 2.0)) {
    throw ValidationError("off-diagonal probe: gradient families are exact only for (p,q) = (2,2)");
  }

  const Ball b1 = ball(space, opt.anchor, rt);
  std::map<double, double> best;  // set distance -> largest norm
  for (Vertex y = 0; y < n; ++y) {
    const double dc = metric.distance(opt.anchor, y);
    if (dc <= 2.0 * rt) continue;
    const Ball b2 = ball(space, y, rt);
    double d = kInfinity;
    for (Vertex a : b1.members) {
      for (Vertex b : b2.members) d = std::min(d, metric.distance(a, b));
    }
    if (!(d > 0.0)) continue;
    const double ratio = d * d / t;
    if (ratio < opt.min_ratio || ratio > opt.max_ratio) continue;
    double norm = 0.0;
    if (gradient) {
      std::vector<Eigen::RowVectorXd> rows;
      for (Vertex x : b2.members) {
        for (const Neighbor& nb : space.neighbors(x)) {
          Eigen::RowVectorXd row(static_cast<Eigen::Index>(b1.members.size()));
          for (std::size_t j = 0; j < b1.members.size(); ++j) {
            const auto c = static_cast<Eigen::Index>(b1.members[j]);
            row[static_cast<Eigen::Index>(j)] =
                std::sqrt(nb.weight / 2.0) * (A(static_cast<Eigen::Index>(x), c) - A(static_cast<Eigen::Index>(nb.vertex), c)) /
                std::sqrt(spec.measure[c]);
          }
          rows.push_back(row);
        }
      }
      Eigen::MatrixXd R(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(b1.members.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) R.row(static_cast<Eigen::Index>(i)) = rows[i];
      norm = rt * spectral_norm(R);
    } else {
      norm = restricted_norm(A, spec.measure, b2.members, b1.members, opt.p, opt.q);
    }
    const double key = std::round(d / space.mesh() * 1e6) / 1e6 * space.mesh();
    best[key] = std::max(best[key], norm);
  }
  double top = 0.0;
  for (const auto& [d, v] : best) top = std::max(top, v);
  ProbeReport r;
  r.tag = "OffDiag";
  r.params = {{"family", to_string(opt.family)}, {"N", opt.N},   {"t", t},
              {"p", std::isinf(opt.p) ? json("inf") : json(opt.p)},
              {"q", std::isinf(opt.q) ? json("inf") : json(opt.q)},
              {"exponential", opt.exponential}};
  r.samples = {{"anchor", opt.anchor}, {"ball_radius", rt}, {"distances", best.size()}};
  std::size_t floor_hits = 0;
  for (const auto& [d, v] : best) {
    if (!(v > 1e-13 * top)) {
      ++floor_hits;
      continue;
    }
    const double ratio = d * d / t;
    r.points.emplace_back(opt.exponential ? ratio : std::log1p(ratio), std::log(v));
  }
  if (r.points.size() < 4) throw ValidationError("off-diagonal probe: fewer than 4 usable ball pairs");
  const ProbeFit lf = fit_from(r.points);
  r.fit = {-lf.exponent, lf.constant, lf.residual, lf.r_squared};
  r.diagnostics = {{"below_roundoff_floor", floor_hits},
                   {"meaning", opt.exponential ? "exponent = c in exp(-c d^2/t)" : "exponent = order in (1+d^2/t)^{-N}"}};
  return r;
}

ProbeReport kernel_decay_probe(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g,
                               std::vector<double> times, int levels) {
  if (levels < 2) throw ValidationError("kernel decay probe: need at least 3 ratios");
  if (times.empty()) {
    const double l = spec.lambda_max();
    times = {16.0 / l, 64.0 / l, 1.0 / spec.lambda_min()};
  }
  ProbeReport r;
  r.tag = "KernelDecay";
  r.params = {{"alpha", cfg.alpha}, {"D", cfg.order}, {"levels", levels}};
  r.samples = {{"times", times}, {"ratios", "s/t = 2^-k"}};
  std::vector<double> slopes;
  json per_time = json::array();
  for (double t : times) {
    std::vector<std::pair<double, double>> pts;
    std::vector<double> norms;
    for (int k = 0; k <= levels; ++k) {
      const double s = t * std::ldexp(1.0, -k);
      const double v = spectral_norm(kernel_matrix(spec, cfg, g, s, t));
      norms.push_back(v);
      if (v > 0.0) pts.emplace_back(-k * std::log(2.0), std::log(v));
    }
    const ProbeFit lf = fit_from(pts);
    slopes.push_back(lf.exponent);
    r.points.insert(r.points.end(), pts.begin(), pts.end());
    per_time.push_back({{"t", t}, {"exponent", lf.exponent}, {"r_squared", lf.r_squared}, {"norms", norms}});
  }
  r.fit = {median(slopes), 0.0, 0.0, 1.0};
  r.fit.constant = per_time.empty() ? 0.0 : per_time[0]["norms"][0].get<double>();
  r.diagnostics = {{"per_time", per_time}, {"theory", 0.5 * (1.0 - cfg.alpha)}};
  return r;
}

ProbeReport ahlfors_probe(const DirichletSpace& space, std::vector<double> radii, double nu) {
  const Metric& metric = space.metric();
  const double h = space.mesh();
  if (radii.empty()) radii = geometric(h, std::max(2.0 * h, metric.diameter() / 4.0), 8);
  if (!(nu > 0.0)) throw ValidationError("Ahlfors probe: nu must be positive");
  double c1 = kInfinity, c2 = 0.0;
  ProbeReport r;
  r.tag = "Ahlfors";
  r.params = {{"nu", nu}};
  r.samples = {{"radii", radii}, {"centers", space.size()}};
  for (Vertex x = 0; x < space.size(); ++x) {
    for (double rad : radii) {
      const double v = metric.volume(x, rad);
      c1 = std::min(c1, v / std::pow(rad, nu));
      c2 = std::max(c2, v / std::pow(rad, nu));
      r.points.emplace_back(std::log(rad), std::log(v));
    }
  }
  const ProbeFit lf = fit_from(r.points);
  r.fit = {lf.exponent, c2 / c1, lf.residual, lf.r_squared};
  r.diagnostics = {{"c1", c1}, {"c2", c2}, {"degenerate", radii.size() < 2}};
  return r;
}

ProbeReport imaginary_power_probe(const SpectralData& spec, double p, std::vector<double> betas, std::uint64_t seed) {
  if (betas.empty()) betas = {1.0, 2.0, 4.0, 8.0};
  ProbeReport r;
  r.tag = "ImagPower";
  r.seed = seed;
  r.params = {{"p", std::isinf(p) ? json("inf") : json(p)}};
  r.samples = {{"betas", betas}};
  json table = json::array();
  for (double b : betas) {
    const NormBound nb = imaginary_power_norm(spec, b, p, seed);
    table.push_back({{"beta", b}, {"lower", nb.lower}, {"upper", nb.upper}, {"exact", nb.exact}});
    r.points.emplace_back(std::log1p(std::abs(b)), std::log(nb.lower));
  }
  const ProbeFit lf = fit_from(r.points);
  r.fit = {lf.exponent, lf.constant, lf.residual, lf.r_squared};
  r.diagnostics = {{"norms", table}};
  return r;
}

namespace {

double number(const json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  const auto& v = p[key];
  if (v.is_string() && (v == "inf" || v == "infinity")) return kInfinity;
  if (!v.is_number()) throw ValidationError(std::string("probe params: '") + key + "' must be a number");
  return v.get<double>();
}

template <typename T>
std::vector<T> list(const json& p, const char* key) {
  if (!p.contains(key)) return {};
  try {
    return p[key].get<std::vector<T>>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("probe params: '") + key + "' must be a list");
  }
}

}  // namespace

ProbeReport run_probe(const DirichletSpace& space, const SpectralData& spec, const std::string& tag, const json& params,
                      std::uint64_t seed) {
  const json p = params.is_null() ? json::object() : params;
  EnsembleSpec ens = ensemble_from_json(p.value("ensemble", json()));
  if (!p.contains("ensemble") || !p["ensemble"].contains("seed")) ens.seed = seed;
  ProbeReport r;
  if (tag == "VD") {
    r = doubling_probe(space, list<double>(p, "radii"));
  } else if (tag == "DUE" || tag == "UE") {
    r = due_ue_probe(space, spec, list<double>(p, "times"), tag, number(p, "m", 2.0));
  } else if (tag == "Gp") {
    r = gradient_bound_probe(space, spec, number(p, "p", 2.0), list<double>(p, "times"), seed);
  } else if (tag == "Rp" || tag == "RRp" || tag == "Ep") {
    r = riesz_probe(space, spec, number(p, "p", 2.0), ens, tag);
  } else if (tag == "Pp") {
    r = poincare_probe(space, number(p, "p", 2.0), list<double>(p, "radii"), list<Vertex>(p, "centers"), &spec, ens);
  } else if (tag == "DG2") {
    r = degiorgi_probe(space, spec, list<double>(p, "radii"), list<Vertex>(p, "centers"), ens);
  } else if (tag == "H" || tag == "Hbar") {
    r = holder_probe(space, spec, number(p, "p", 2.0), number(p, "q", 2.0), list<double>(p, "times"),
                     list<Vertex>(p, "centers"), tag == "H" ? HolderVariant::H : HolderVariant::Hbar, ens);
  } else if (tag == "Ahlfors") {
    r = ahlfors_probe(space, list<double>(p, "radii"), number(p, "nu", 2.0));
  } else if (tag == "ImagPower") {
    r = imaginary_power_probe(spec, number(p, "p", 4.0), list<double>(p, "betas"), seed);
  } else if (tag == "OffDiag") {
    OffDiagonalOptions opt;
    opt.family = parse_family(p.value("family", std::string("heat")));
    if (opt.family == OperatorFamily::kernel) throw ValidationError("OffDiag: use KernelDecay for the paraproduct kernel");
    opt.N = number(p, "N", 1.0);
    opt.t = number(p, "t", 0.0);
    opt.p = number(p, "p", 2.0);
    opt.q = number(p, "q", 2.0);
    opt.anchor = static_cast<Vertex>(number(p, "anchor", 0.0));
    opt.exponential = p.value("exponential", false);
    opt.min_ratio = number(p, "min_ratio", 0.0);
    opt.max_ratio = number(p, "max_ratio", kInfinity);
    r = offdiagonal_probe(space, spec, opt);
  } else if (tag == "KernelDecay") {
    const ParaproductConfig cfg = make_config(spec, number(p, "nu", 2.0), number(p, "alpha", 0.5),
                                              static_cast<int>(number(p, "grid_ppd", 32.0)));
    EnsembleSpec ge;
    ge.kind = EnsembleKind::uniform;
    ge.count = 1;
    ge.seed = seed;
    const Field g = make_ensemble(spec, ge).front();
    r = kernel_decay_probe(spec, cfg, g, list<double>(p, "times"), static_cast<int>(number(p, "levels", 7.0)));
  } else {
    std::string valid;
    for (const auto& t : hypothesis_tags()) valid += (valid.empty() ? "" : ", ") + t;
    throw ValidationError("unknown hypothesis tag '" + tag + "' (valid: " + valid + ")");
  }
  r.seed = seed;
  r.samples["space_hash"] = space.hash();
  return r;
}

}  // namespace dircalc
