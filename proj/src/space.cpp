#include "dircalc/space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "dircalc/errors.hpp"
#include "dircalc/numerics.hpp"

namespace dircalc {

using nlohmann::json;

namespace {

// Ball membership tolerance: distances are sums of edge lengths, radii are often products.
double ball_limit(double r) { return r + 1e-10 * std::max(1.0, std::abs(r)); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void require_field(const DirichletSpace& space, const Field& f, const char* what) {
  if (static_cast<std::size_t>(f.size()) != space.size()) {
    throw ValidationError(std::string(what) + ": field length " + std::to_string(f.size()) +
                          " does not match " + std::to_string(space.size()) + " vertices");
  }
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Metric

Metric::Metric(const DirichletSpace& space) : n_(space.size()) {
  dist_.assign(n_ * n_, kInfinity);
  order_.resize(n_ * n_);
  sorted_.resize(n_ * n_);
  cumulative_.resize(n_ * n_);
  using Item = std::pair<double, std::size_t>;
  const auto& mu = space.measure();
  for (std::size_t s = 0; s < n_; ++s) {
    double* d = &dist_[s * n_];
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    d[s] = 0.0;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      const auto [dx, x] = heap.top();
      heap.pop();
      if (dx > d[x]) continue;
      for (const Neighbor& nb : space.neighbors(x)) {
        const double alt = dx + nb.length;
        if (alt < d[nb.vertex]) {
          d[nb.vertex] = alt;
          heap.emplace(alt, nb.vertex);
        }
      }
    }
    std::uint32_t* ord = &order_[s * n_];
    std::iota(ord, ord + n_, 0u);
    std::stable_sort(ord, ord + n_, [d](std::uint32_t a, std::uint32_t b) { return d[a] < d[b]; });
    double acc = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      sorted_[s * n_ + k] = d[ord[k]];
      acc += mu[ord[k]];
      cumulative_[s * n_ + k] = acc;
    }
    diameter_ = std::max(diameter_, sorted_[s * n_ + n_ - 1]);
  }
}

std::span<const std::uint32_t> Metric::by_distance(Vertex x) const {
  return {order_.data() + x * n_, n_};
}

std::span<const double> Metric::sorted_distances(Vertex x) const {
  return {sorted_.data() + x * n_, n_};
}

std::size_t Metric::ball_size(Vertex x, double r) const {
  if (r < 0.0) return 0;
  const auto row = sorted_distances(x);
  return static_cast<std::size_t>(std::upper_bound(row.begin(), row.end(), ball_limit(r)) - row.begin());
}

double Metric::volume(Vertex x, double r) const {
  const std::size_t k = ball_size(x, r);
  return k == 0 ? 0.0 : cumulative_[x * n_ + k - 1];
}

// ---------------------------------------------------------------------------------------------
// DirichletSpace

struct DirichletSpace::MetricSlot {
  std::once_flag once;
  std::unique_ptr<Metric> metric;
};

DirichletSpace::DirichletSpace(std::vector<double> measure, std::vector<Edge> edges, double mesh,
                               std::string kind, json params)
    : mesh_(mesh), kind_(std::move(kind)), params_(std::move(params)),
      metric_(std::make_shared<MetricSlot>()) {
  const std::size_t n = measure.size();
  if (n == 0) throw ValidationError("space: at least one vertex is required");
  if (!(mesh > 0.0) || !std::isfinite(mesh)) throw ValidationError("space: mesh must be positive");
  measure_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(measure[i] > 0.0) || !std::isfinite(measure[i])) {
      throw ValidationError("space: measure must be strictly positive at vertex " + std::to_string(i));
    }
    measure_[static_cast<Eigen::Index>(i)] = measure[i];
  }
  total_measure_ = measure_.sum();

  std::set<std::pair<Vertex, Vertex>> seen;
  for (Edge e : edges) {
    if (e.u >= n || e.v >= n) throw ValidationError("space: edge endpoint out of range");
    if (!std::isfinite(e.weight) || e.weight < 0.0) throw ValidationError("space: conductance must be >= 0");
    if (e.weight == 0.0) continue;
    if (e.u == e.v) throw ValidationError("space: self-loop with positive conductance (w(x,x) must be 0)");
    if (!(e.length > 0.0) || !std::isfinite(e.length)) {
      throw ValidationError("space: edge length must be positive on every edge");
    }
    if (e.u > e.v) std::swap(e.u, e.v);
    if (!seen.emplace(e.u, e.v).second) {
      throw ValidationError("space: duplicate edge " + std::to_string(e.u) + "-" + std::to_string(e.v));
    }
    edges_.push_back(e);
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });

  std::vector<std::size_t> degree(n, 0);
  for (const Edge& e : edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacency_[fill[e.u]++] = {e.v, e.weight, e.length};
    adjacency_[fill[e.v]++] = {e.u, e.weight, e.length};
  }

  // Connectivity.
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> stack{0};
  visited[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t x = stack.back();
    stack.pop_back();
    for (const Neighbor& nb : neighbors(x)) {
      if (!visited[nb.vertex]) {
        visited[nb.vertex] = 1;
        ++count;
        stack.push_back(nb.vertex);
      }
    }
  }
  if (count != n) {
    throw ValidationError("space: graph is disconnected (" + std::to_string(count) + " of " +
                          std::to_string(n) + " vertices reachable from vertex 0)");
  }
  hash_ = fnv1a(space_to_json(*this).dump());
}

std::span<const Neighbor> DirichletSpace::neighbors(Vertex x) const {
  return {adjacency_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
}

const Metric& DirichletSpace::metric() const {
  std::call_once(metric_->once, [this] { metric_->metric = std::make_unique<Metric>(*this); });
  return *metric_->metric;
}

// ---------------------------------------------------------------------------------------------
// Operators and forms

Eigen::SparseMatrix<double> generator(const DirichletSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(space.size() + 2 * space.edges().size());
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  const auto& mu = space.measure();
  for (const Edge& e : space.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u), v = static_cast<Eigen::Index>(e.v);
    diag[u] += e.weight;
    diag[v] += e.weight;
    triplets.emplace_back(u, v, -e.weight / mu[u]);
    triplets.emplace_back(v, u, -e.weight / mu[v]);
  }
  for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, diag[i] / mu[i]);
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(triplets.begin(), triplets.end());
  return L;
}

Field apply_generator(const DirichletSpace& space, const Field& f) {
  require_field(space, f, "generator");
  Field out = Field::Zero(f.size());
  for (const Edge& e : space.edges()) {
    const double d = e.weight * (f[e.u] - f[e.v]);
    out[e.u] += d;
    out[e.v] -= d;
  }
  return out.cwiseQuotient(space.measure());
}

double energy(const DirichletSpace& space, const Field& f, const Field& g) {
  require_field(space, f, "energy");
  require_field(space, g, "energy");
  double s = 0.0;
  for (const Edge& e : space.edges()) s += e.weight * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v]);
  return s;
}

Field carre_du_champ(const DirichletSpace& space, const Field& f, const Field& g) {
  require_field(space, f, "carre_du_champ");
  require_field(space, g, "carre_du_champ");
  Field out = Field::Zero(f.size());
  for (const Edge& e : space.edges()) {
    const double c = 0.5 * e.weight * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v]);
    out[e.u] += c;
    out[e.v] += c;
  }
  return out.cwiseQuotient(space.measure());
}

Field gradient_length(const DirichletSpace& space, const Field& f) {
  return carre_du_champ(space, f, f).cwiseMax(0.0).cwiseSqrt();
}

double leibniz_defect(const DirichletSpace& space, const Field& f, const Field& g, const Field& h) {
  const Field fg = f.cwiseProduct(g);
  const Field defect = carre_du_champ(space, fg, h) - f.cwiseProduct(carre_du_champ(space, g, h)) -
                       g.cwiseProduct(carre_du_champ(space, f, h));
  return defect.cwiseAbs().maxCoeff();
}

double inner(const DirichletSpace& space, const Field& f, const Field& g) {
  require_field(space, f, "inner");
  require_field(space, g, "inner");
  return (f.cwiseProduct(g).cwiseProduct(space.measure())).sum();
}

double mean(const DirichletSpace& space, const Field& f) {
  require_field(space, f, "mean");
  return f.cwiseProduct(space.measure()).sum() / space.total_measure();
}

// ---------------------------------------------------------------------------------------------
// Metric geometry

double distance(const DirichletSpace& space, Vertex x, Vertex y) {
  if (x >= space.size() || y >= space.size()) throw ValidationError("distance: vertex out of range");
  return space.metric().distance(x, y);
}

Ball ball(const DirichletSpace& space, Vertex x, double r) {
  if (x >= space.size()) throw ValidationError("ball: vertex out of range");
  if (!(r >= 0.0)) throw ValidationError("ball: radius must be nonnegative");
  const Metric& m = space.metric();
  Ball b;
  b.center = x;
  b.radius = r;
  const std::size_t k = m.ball_size(x, r);
  const auto order = m.by_distance(x);
  b.members.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  b.volume = m.volume(x, r);
  return b;
}

double volume(const DirichletSpace& space, Vertex x, double r) {
  if (x >= space.size()) throw ValidationError("volume: vertex out of range");
  return space.metric().volume(x, r);
}

DoublingFit doubling_fit(const DirichletSpace& space, const std::vector<double>& radii) {
  if (radii.empty()) throw ValidationError("doubling_fit: empty radius list");
  for (double r : radii) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("doubling_fit: radii must be positive");
  }
  DoublingFit fit;
  fit.radii = radii;
  std::sort(fit.radii.begin(), fit.radii.end());
  if (space.size() == 1) return fit;
  const Metric& m = space.metric();
  std::vector<double> lx, ly;
  for (double r : fit.radii) lx.push_back(std::log(r));
  double nu_sum = 0.0;
  fit.nu = 0.0;
  for (Vertex x = 0; x < space.size(); ++x) {
    ly.clear();
    for (double r : fit.radii) {
      const double v = m.volume(x, r);
      fit.constant = std::max(fit.constant, m.volume(x, 2.0 * r) / v);
      ly.push_back(std::log(v));
    }
    const LinearFit lf = fit_line(lx, ly);
    fit.nu = std::max(fit.nu, lf.slope);
    nu_sum += lf.slope;
    fit.max_residual = std::max(fit.max_residual, lf.max_residual);
  }
  fit.mean_nu = nu_sum / static_cast<double>(space.size());
  fit.nu = std::max(fit.nu, 0.0);
  return fit;
}

// ---------------------------------------------------------------------------------------------
// Generators

namespace {

int get_int(const json& p, const char* key, int fallback) {
  if (!p.contains(key)) return fallback;
  if (!p[key].is_number_integer()) throw ValidationError(std::string("generate: '") + key + "' must be an integer");
  return p[key].get<int>();
}

double get_double(const json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p[key].is_number()) throw ValidationError(std::string("generate: '") + key + "' must be a number");
  return p[key].get<double>();
}

// Accumulates undirected edges, merging parallel ones (conductances add).
class EdgeBuilder {
 public:
  void add(Vertex u, Vertex v, double w, double len) {
    if (u == v) return;
    if (u > v) std::swap(u, v);
    auto [it, inserted] = edges_.try_emplace({u, v}, Edge{u, v, w, len});
    if (!inserted) {
      it->second.weight += w;
      it->second.length = std::min(it->second.length, len);
    }
  }
  std::vector<Edge> take() {
    std::vector<Edge> out;
    out.reserve(edges_.size());
    for (auto& [key, e] : edges_) out.push_back(e);
    return out;
  }

 private:
  std::map<std::pair<Vertex, Vertex>, Edge> edges_;
};

// Grid calibration mu = h^d, w = h^{d-2}, l = h so that L approximates -Laplacian.
void add_grid(EdgeBuilder& eb, std::vector<double>& mu, int d, int n, double h, bool periodic, Vertex offset) {
  std::size_t count = 1;
  for (int k = 0; k < d; ++k) count *= static_cast<std::size_t>(n);
  const double w = std::pow(h, d - 2);
  for (std::size_t i = 0; i < count; ++i) {
    mu.push_back(std::pow(h, d));
    std::size_t stride = 1;
    for (int k = 0; k < d; ++k) {
      const std::size_t coord = (i / stride) % static_cast<std::size_t>(n);
      if (coord + 1 < static_cast<std::size_t>(n)) {
        eb.add(offset + i, offset + i + stride, w, h);
      } else if (periodic) {
        eb.add(offset + i, offset + i - coord * stride, w, h);
      }
      stride *= static_cast<std::size_t>(n);
    }
  }
}

DirichletSpace make_grid(const std::string& kind, const json& params, bool periodic) {
  const int d = get_int(params, "d", 1);
  const int n = get_int(params, "n", 0);
  if (d < 1) throw ValidationError(kind + ": dimension d must be >= 1");
  if (n < 2) throw ValidationError(kind + ": size n must be >= 2");
  const double h = get_double(params, "h", 1.0 / n);
  if (!(h > 0.0)) throw ValidationError(kind + ": h must be positive");
  EdgeBuilder eb;
  std::vector<double> mu;
  add_grid(eb, mu, d, n, h, periodic, 0);
  return DirichletSpace(std::move(mu), eb.take(), h, kind, json{{"d", d}, {"n", n}, {"h", h}});
}

DirichletSpace make_path(const json& params) {
  const int n = get_int(params, "n", 0);
  if (n < 2) throw ValidationError("path: size n must be >= 2");
  const double h = get_double(params, "h", 1.0);
  if (!(h > 0.0)) throw ValidationError("path: h must be positive");
  EdgeBuilder eb;
  std::vector<double> mu;
  add_grid(eb, mu, 1, n, h, false, 0);
  return DirichletSpace(std::move(mu), eb.take(), h, "path", json{{"n", n}, {"h", h}});
}

// Two box grids joined by a path of `neck` extra vertices between the centres of facing sides.
DirichletSpace make_dumbbell(const json& params) {
  const int d = get_int(params, "d", 2);
  const int n = get_int(params, "n", 0);
  const int neck = get_int(params, "neck", 2);
  if (d < 1) throw ValidationError("dumbbell: dimension d must be >= 1");
  if (n < 2) throw ValidationError("dumbbell: size n must be >= 2");
  if (neck < 0) throw ValidationError("dumbbell: neck must be >= 0");
  const double h = get_double(params, "h", 1.0 / n);
  if (!(h > 0.0)) throw ValidationError("dumbbell: h must be positive");
  EdgeBuilder eb;
  std::vector<double> mu;
  add_grid(eb, mu, d, n, h, false, 0);
  const std::size_t block = mu.size();
  add_grid(eb, mu, d, n, h, false, block);
  // Centre of the face x_0 = n-1 in block A, and of the face x_0 = 0 in block B.
  std::size_t centre_offset = 0, stride = 1;
  for (int k = 0; k < d; ++k) {
    if (k > 0) centre_offset += static_cast<std::size_t>(n / 2) * stride;
    stride *= static_cast<std::size_t>(n);
  }
  const Vertex a = centre_offset + static_cast<std::size_t>(n - 1);
  const Vertex b = block + centre_offset;
  Vertex prev = a;
  for (int k = 0; k < neck; ++k) {
    const Vertex v = mu.size();
    mu.push_back(std::pow(h, d));
    eb.add(prev, v, std::pow(h, d - 2), h);
    prev = v;
  }
  eb.add(prev, b, std::pow(h, d - 2), h);
  return DirichletSpace(std::move(mu), eb.take(), h, "dumbbell",
                        json{{"d", d}, {"n", n}, {"neck", neck}, {"h", h}});
}

DirichletSpace make_binary_tree(const json& params) {
  const int depth = get_int(params, "depth", 0);
  if (depth < 1 || depth > 20) throw ValidationError("binary_tree: depth must be in [1, 20]");
  const double h = get_double(params, "h", 1.0);
  if (!(h > 0.0)) throw ValidationError("binary_tree: h must be positive");
  const std::size_t count = (std::size_t{1} << (depth + 1)) - 1;
  EdgeBuilder eb;
  std::vector<double> mu(count, h);
  for (std::size_t i = 1; i < count; ++i) eb.add((i - 1) / 2, i, 1.0 / h, h);
  return DirichletSpace(std::move(mu), eb.take(), h, "binary_tree", json{{"depth", depth}, {"h", h}});
}

// Sierpinski gasket graph at level k: mu(x) = deg(x) / (2 * 3^{k+1}), w = (5/3)^k, l = 2^{-k}.
DirichletSpace make_sierpinski(const json& params) {
  const int level = get_int(params, "level", 0);
  if (level < 1 || level > 8) throw ValidationError("sierpinski: level must be in [1, 8]");
  const long side = 1L << level;
  std::vector<std::pair<long, long>> corners{{0, 0}};
  long size = side;
  while (size > 1) {
    const long half = size / 2;
    std::vector<std::pair<long, long>> next;
    next.reserve(corners.size() * 3);
    for (auto [x, y] : corners) {
      next.emplace_back(x, y);
      next.emplace_back(x + half, y);
      next.emplace_back(x, y + half);
    }
    corners = std::move(next);
    size = half;
  }
  std::map<std::pair<long, long>, Vertex> index;
  auto id = [&index](long x, long y) {
    auto [it, inserted] = index.try_emplace({x, y}, index.size());
    return it->second;
  };
  const double h = std::ldexp(1.0, -level);
  const double w = std::pow(5.0 / 3.0, level);
  EdgeBuilder eb;
  std::vector<std::pair<Vertex, Vertex>> raw;
  for (auto [x, y] : corners) {
    const Vertex a = id(x, y), b = id(x + 1, y), c = id(x, y + 1);
    raw.emplace_back(a, b);
    raw.emplace_back(b, c);
    raw.emplace_back(a, c);
  }
  std::vector<double> degree(index.size(), 0.0);
  for (auto [a, b] : raw) {
    eb.add(a, b, w, h);
    degree[a] += 1.0;
    degree[b] += 1.0;
  }
  const double total = 2.0 * std::pow(3.0, level + 1);
  std::vector<double> mu(index.size());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = degree[i] / total;
  return DirichletSpace(std::move(mu), eb.take(), h, "sierpinski", json{{"level", level}});
}

}  // namespace

std::vector<std::string> generator_kinds() {
  return {"torus_grid", "box_grid", "path", "dumbbell", "binary_tree", "sierpinski"};
}

DirichletSpace generate(const std::string& kind, const json& params) {
  if (!params.is_object() && !params.is_null()) throw ValidationError("generate: params must be an object");
  const json p = params.is_null() ? json::object() : params;
  if (kind == "torus_grid") return make_grid(kind, p, true);
  if (kind == "box_grid") return make_grid(kind, p, false);
  if (kind == "path") return make_path(p);
  if (kind == "dumbbell") return make_dumbbell(p);
  if (kind == "binary_tree") return make_binary_tree(p);
  if (kind == "sierpinski") return make_sierpinski(p);
  std::string valid;
  for (const auto& k : generator_kinds()) valid += (valid.empty() ? "" : ", ") + k;
  throw ValidationError("generate: unknown kind '" + kind + "' (valid: " + valid + ")");
}

// ---------------------------------------------------------------------------------------------
// Space file format

json space_to_json(const DirichletSpace& space) {
  json vertices = json::array();
  for (std::size_t i = 0; i < space.size(); ++i) {
    vertices.push_back({{"id", i}, {"mu", space.measure()[static_cast<Eigen::Index>(i)]}});
  }
  json edges = json::array();
  for (const Edge& e : space.edges()) {
    edges.push_back({{"u", e.u}, {"v", e.v}, {"w", e.weight}, {"len", e.length}});
  }
  return json{{"version", 1},       {"kind", space.kind()}, {"params", space.params()},
              {"h", space.mesh()},  {"vertices", vertices}, {"edges", edges}};
}

DirichletSpace space_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw ValidationError("space file: top level must be an object");
    if (doc.value("version", 0) != 1) throw ValidationError("space file: unsupported version");
    const auto& vertices = doc.at("vertices");
    std::vector<double> mu(vertices.size(), 0.0);
    std::vector<char> present(vertices.size(), 0);
    for (const auto& v : vertices) {
      const auto id = v.at("id").get<std::size_t>();
      if (id >= mu.size() || present[id]) throw ValidationError("space file: vertex ids must be dense and unique");
      present[id] = 1;
      mu[id] = v.at("mu").get<double>();
    }
    // Each unordered pair may be listed once, or once per orientation with equal conductance.
    std::map<std::pair<Vertex, Vertex>, std::vector<Edge>> listed;
    for (const auto& e : doc.at("edges")) {
      Edge edge{e.at("u").get<std::size_t>(), e.at("v").get<std::size_t>(), e.at("w").get<double>(),
                e.at("len").get<double>()};
      listed[{std::min(edge.u, edge.v), std::max(edge.u, edge.v)}].push_back(edge);
    }
    std::vector<Edge> edges;
    for (auto& [key, group] : listed) {
      if (group.size() == 1) {
        edges.push_back(group.front());
      } else if (group.size() == 2 && group[0].u == group[1].v && group[0].weight == group[1].weight) {
        edges.push_back(group.front());
      } else {
        throw ValidationError("space file: conductance between " + std::to_string(key.first) + " and " +
                              std::to_string(key.second) + " is not symmetric or is listed twice");
      }
    }
    return DirichletSpace(std::move(mu), std::move(edges), doc.at("h").get<double>(),
                          doc.value("kind", std::string("custom")), doc.value("params", json::object()));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("space file: ") + e.what());
  }
}

void save_space(const DirichletSpace& space, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << space_to_json(space).dump(1) << '\n';
}

DirichletSpace load_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read space file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("space file " + path + ": " + e.what());
  }
  return space_from_json(doc);
}

}  // namespace dircalc
