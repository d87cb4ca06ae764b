#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "json.hpp"

namespace dircalc {

/// Vertex-indexed real vector; length equals the number of vertices.
using Field = Eigen::VectorXd;
using Vertex = std::size_t;

struct Edge {
  Vertex u = 0;
  Vertex v = 0;
  double weight = 0.0;  // conductance w(u,v)
  double length = 0.0;  // edge length l(u,v), used by the shortest-path metric
};

struct Neighbor {
  Vertex vertex = 0;
  double weight = 0.0;
  double length = 0.0;
};

class DirichletSpace;

/// All-pairs shortest-path tables. Balls are prefixes of `by_distance(x)`.
class Metric {
 public:
  explicit Metric(const DirichletSpace& space);

  std::size_t size() const { return n_; }
  double distance(Vertex x, Vertex y) const { return dist_[x * n_ + y]; }
  /// Vertices sorted by distance from x (ties by index); the first entry is x.
  std::span<const std::uint32_t> by_distance(Vertex x) const;
  std::span<const double> sorted_distances(Vertex x) const;
  /// Number of vertices with d(x, y) <= r.
  std::size_t ball_size(Vertex x, double r) const;
  /// V(x, r) = sum of mu over the closed ball.
  double volume(Vertex x, double r) const;
  double eccentricity(Vertex x) const { return sorted_[x * n_ + n_ - 1]; }
  double diameter() const { return diameter_; }

 private:
  std::size_t n_;
  std::vector<double> dist_;
  std::vector<std::uint32_t> order_;
  std::vector<double> sorted_;
  std::vector<double> cumulative_;
  double diameter_ = 0.0;
};

/// Finite connected weighted graph with vertex measure: the discrete (M, d, mu, E).
/// Immutable after construction.
class DirichletSpace {
 public:
  DirichletSpace(std::vector<double> measure, std::vector<Edge> edges, double mesh,
                 std::string kind = "custom", nlohmann::json params = nlohmann::json::object());

  std::size_t size() const { return measure_.size(); }
  const Eigen::VectorXd& measure() const { return measure_; }
  double total_measure() const { return total_measure_; }
  /// Canonical undirected edge list (u < v, sorted).
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(Vertex x) const;
  double mesh() const { return mesh_; }
  const std::string& kind() const { return kind_; }
  const nlohmann::json& params() const { return params_; }

  /// Shortest-path tables, computed on first use.
  const Metric& metric() const;
  /// FNV-1a hash of the canonical serialization; keys the spectral cache.
  std::uint64_t hash() const { return hash_; }

 private:
  Eigen::VectorXd measure_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  double mesh_;
  double total_measure_ = 0.0;
  std::string kind_;
  nlohmann::json params_;
  std::uint64_t hash_ = 0;

  struct MetricSlot;
  std::shared_ptr<MetricSlot> metric_;
};

struct Ball {
  Vertex center = 0;
  double radius = 0.0;
  std::vector<Vertex> members;
  double volume = 0.0;
};

/// The generator (Lf)(x) = mu(x)^{-1} sum_y w(x,y) (f(x) - f(y)) as a sparse matrix.
Eigen::SparseMatrix<double> generator(const DirichletSpace& space);
Field apply_generator(const DirichletSpace& space, const Field& f);

/// E(f,g) = 1/2 sum_{x,y} w(x,y) (f(x)-f(y)) (g(x)-g(y)).
double energy(const DirichletSpace& space, const Field& f, const Field& g);

/// Gamma(f,g)(x) = (2 mu(x))^{-1} sum_y w(x,y) (f(x)-f(y)) (g(x)-g(y)).
Field carre_du_champ(const DirichletSpace& space, const Field& f, const Field& g);

/// Pointwise |grad f| = sqrt(Gamma(f,f)).
Field gradient_length(const DirichletSpace& space, const Field& f);

/// max_x |Gamma(fg,h) - f Gamma(g,h) - g Gamma(f,h)|(x). Zero only in the strongly local limit.
double leibniz_defect(const DirichletSpace& space, const Field& f, const Field& g, const Field& h);

double distance(const DirichletSpace& space, Vertex x, Vertex y);
Ball ball(const DirichletSpace& space, Vertex x, double r);
double volume(const DirichletSpace& space, Vertex x, double r);

struct DoublingFit {
  double constant = 1.0;   // sup_{x,r} V(x,2r)/V(x,r)
  double nu = 0.0;         // max over centres of the log-log slope of V(x, r)
  double mean_nu = 0.0;    // average slope over centres
  double max_residual = 0.0;
  std::vector<double> radii;
};

DoublingFit doubling_fit(const DirichletSpace& space, const std::vector<double>& radii);

/// Builds one of torus_grid, box_grid, path, dumbbell, binary_tree, sierpinski.
DirichletSpace generate(const std::string& kind, const nlohmann::json& params);
std::vector<std::string> generator_kinds();

nlohmann::json space_to_json(const DirichletSpace& space);
DirichletSpace space_from_json(const nlohmann::json& doc);
void save_space(const DirichletSpace& space, const std::string& path);
DirichletSpace load_space(const std::string& path);

/// mu-weighted helpers.
double inner(const DirichletSpace& space, const Field& f, const Field& g);
double mean(const DirichletSpace& space, const Field& f);

}  // namespace dircalc
