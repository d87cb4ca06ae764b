#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dircalc/calculus.hpp"
#include "dircalc/ensemble.hpp"
#include "dircalc/paraproduct.hpp"
#include "dircalc/space.hpp"

namespace dircalc {

struct ProbeFit {
  double exponent = 0.0;
  double constant = 0.0;
  double residual = 0.0;
  double r_squared = 1.0;
};

struct ProbeReport {
  std::string tag;
  nlohmann::json params = nlohmann::json::object();
  ProbeFit fit;
  /// Sampling description: time range, radii, ball count, ensemble.
  nlohmann::json samples = nlohmann::json::object();
  /// Raw regression points (x, y).
  std::vector<std::pair<double, double>> points;
  std::uint64_t seed = 0;
  nlohmann::json diagnostics = nlohmann::json::object();
};

nlohmann::json to_json(const ProbeReport& report);
/// x,y rows of the regression points.
std::string points_csv(const ProbeReport& report);

/// VD, DUE, UE, Gp, Rp, RRp, Ep, Pp, DG2, H, Hbar, Ahlfors, ImagPower
const std::vector<std::string>& hypothesis_tags();

ProbeReport doubling_probe(const DirichletSpace& space, std::vector<double> radii);

/// DUE: sup p_t(x,y) sqrt(V(x,sqrt t) V(y,sqrt t)). UE: regression of log[p_t V(x,sqrt t)] on
/// (d^m/t)^{1/(m-1)} over pairs with d >= sqrt t; m = 2 is Gaussian.
ProbeReport due_ue_probe(const DirichletSpace& space, const SpectralData& spec, std::vector<double> times,
                         const std::string& tag = "UE", double m = 2.0);

/// sup_t ||sqrt(t) |grad e^{-tL}| ||_{p->p}. p = 2 in closed form; p = 1 exact over Dirac masses;
/// p = inf as [ascent lower bound, row-sum upper bound]; other p by ensemble search (lower bound).
ProbeReport gradient_bound_probe(const DirichletSpace& space, const SpectralData& spec, double p,
                                 std::vector<double> times, std::uint64_t seed = 0);

/// Best ensemble constants in ||grad f||_p <= C ||L^{1/2} f||_p and the reverse.
ProbeReport riesz_probe(const DirichletSpace& space, const SpectralData& spec, double p, const EnsembleSpec& ensemble,
                        const std::string& tag = "Rp");

/// Smallest nonzero eigenvalue of the ball-restricted form against mu.
double ball_neumann_eigenvalue(const DirichletSpace& space, const std::vector<Vertex>& members);

/// (avg_B |f - avg_B f|^p)^{1/p} <= C r (avg_B |grad_B f|^p)^{1/p}, grad_B using edges inside B.
/// p = 2 exact per ball; other p by ensemble search.
ProbeReport poincare_probe(const DirichletSpace& space, double p, std::vector<double> radii,
                           std::vector<Vertex> centers = {}, const SpectralData* spec = nullptr,
                           const EnsembleSpec& ensemble = {});

ProbeReport degiorgi_probe(const DirichletSpace& space, const SpectralData& spec, std::vector<double> radii,
                           std::vector<Vertex> centers, const EnsembleSpec& ensemble);

enum class HolderVariant { H, Hbar };
/// Fits eta in q-osc_{B_r}(e^{-tL} f) <= C (r/sqrt t)^eta RHS over r = sqrt(t) 2^{-k}.
ProbeReport holder_probe(const DirichletSpace& space, const SpectralData& spec, double p, double q,
                         std::vector<double> times, std::vector<Vertex> centers,
                         HolderVariant variant = HolderVariant::H, const EnsembleSpec& ensemble = {});

/// Operator families for off-diagonal probes.
enum class OperatorFamily { heat, Q, P, R, grad_heat, grad_Q, grad_P, kernel };
OperatorFamily parse_family(const std::string& name);
std::string to_string(OperatorFamily family);

struct OffDiagonalOptions {
  OperatorFamily family = OperatorFamily::heat;
  double N = 1.0;
  double t = 0.0;          // 0: (4 mesh)^2
  double p = 2.0;
  double q = 2.0;
  Vertex anchor = 0;
  /// Davies-Gaffney form: regress on d^2/t (exponential); otherwise on log(1 + d^2/t).
  bool exponential = false;
  double min_ratio = 0.0;  // keep pairs with d^2/t in [min_ratio, max_ratio]
  double max_ratio = kInfinity;
  const ParaproductConfig* kernel = nullptr;
  const Field* kernel_g = nullptr;
  double kernel_ratio = 0.5;  // s / t for the kernel family
};

ProbeReport offdiagonal_probe(const DirichletSpace& space, const SpectralData& spec, const OffDiagonalOptions& opt);

/// s/t exponent of ||K(s,t)||_{2->2} over s/t = 2^{-k}, k = 0..levels.
ProbeReport kernel_decay_probe(const SpectralData& spec, const ParaproductConfig& cfg, const Field& g,
                               std::vector<double> times, int levels = 7);

/// c1 <= V(x,r)/r^nu <= c2.
ProbeReport ahlfors_probe(const DirichletSpace& space, std::vector<double> radii, double nu);

/// ||L^{i beta}||_{p->p} growth exponent in (1 + |beta|).
ProbeReport imaginary_power_probe(const SpectralData& spec, double p, std::vector<double> betas,
                                  std::uint64_t seed = 0);

/// Dispatch by tag with JSON parameters (used by the CLI).
ProbeReport run_probe(const DirichletSpace& space, const SpectralData& spec, const std::string& tag,
                      const nlohmann::json& params, std::uint64_t seed);

}  // namespace dircalc
