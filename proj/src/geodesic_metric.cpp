#include "reachkit/geodesic_metric.hpp"

#include <algorithm>
#include <cmath>

namespace reachkit {

NeighborhoodGraph graph_from_edges(std::size_t n, const std::vector<WeightedEdge>& edges) {
  NeighborhoodGraph g;
  g.offsets.assign(n + 1, 0);
  for (const auto& e : edges) {
    require(e.i < n && e.j < n, "edge endpoint out of range");
    require(e.w >= 0 && std::isfinite(e.w), "edge weights must be finite and nonnegative");
    ++g.offsets[e.i + 1];
    ++g.offsets[e.j + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
  g.targets.resize(g.offsets[n]);
  g.weights.resize(g.offsets[n]);
  std::vector<std::size_t> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& e : edges) {
    g.targets[fill[e.i]] = e.j;
    g.weights[fill[e.i]++] = e.w;
    g.targets[fill[e.j]] = e.i;
    g.weights[fill[e.j]++] = e.w;
  }
  return g;
}

NeighborhoodGraph build_graph(const PointCloud& cloud, double rho) {
  require(rho > 0 && !std::isnan(rho), "connectivity radius must be positive");
  const auto& X = cloud.matrix();
  const auto n = X.cols();
  std::vector<WeightedEdge> edges;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = (X.col(i) - X.col(j)).norm();
      if (w <= rho) edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), w});
    }
  auto g = graph_from_edges(static_cast<std::size_t>(n), edges);
  g.radius = rho;
  return g;
}

namespace {

// Binary min-heap over node ids keyed by tentative distance, with decrease-key, so each
// node enters at most once per search.
class NodeHeap {
 public:
  explicit NodeHeap(std::size_t n) : pos_(n, kAbsent) {}

  bool empty() const { return heap_.empty(); }

  void push_or_decrease(std::size_t v, const std::vector<double>& key) {
    if (pos_[v] == kAbsent) {
      pos_[v] = heap_.size();
      heap_.push_back(v);
    }
    sift_up(pos_[v], key);
  }

  std::size_t pop(const std::vector<double>& key) {
    const std::size_t top = heap_.front();
    pos_[top] = kAbsent;
    const std::size_t last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      pos_[last] = 0;
      sift_down(0, key);
    }
    return top;
  }

  void clear() {
    for (auto v : heap_) pos_[v] = kAbsent;
    heap_.clear();
  }

 private:
  static constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);

  void place(std::size_t i, std::size_t v) {
    heap_[i] = v;
    pos_[v] = i;
  }
  void sift_up(std::size_t i, const std::vector<double>& key) {
    const std::size_t v = heap_[i];
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (key[heap_[parent]] <= key[v]) break;
      place(i, heap_[parent]);
      i = parent;
    }
    place(i, v);
  }
  void sift_down(std::size_t i, const std::vector<double>& key) {
    const std::size_t v = heap_[i], n = heap_.size();
    for (;;) {
      std::size_t c = 2 * i + 1;
      if (c >= n) break;
      if (c + 1 < n && key[heap_[c + 1]] < key[heap_[c]]) ++c;
      if (key[v] <= key[heap_[c]]) break;
      place(i, heap_[c]);
      i = c;
    }
    place(i, v);
  }

  std::vector<std::size_t> heap_;
  std::vector<std::size_t> pos_;
};

// Fills `dist` from `source`; stops once `target` is settled when target < n.
void dijkstra_into(const NeighborhoodGraph& g, std::size_t source, std::size_t target, std::vector<double>& dist, NodeHeap& heap) {
  const std::size_t n = g.size();
  require(source < n, "node index out of range");
  dist.assign(n, kInf);
  heap.clear();
  dist[source] = 0.0;
  heap.push_or_decrease(source, dist);
  while (!heap.empty()) {
    const std::size_t u = heap.pop(dist);
    if (u == target) break;
    const double du = dist[u];
    for (std::size_t e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
      const std::size_t v = g.targets[e];
      const double alt = du + g.weights[e];
      if (alt < dist[v]) {
        dist[v] = alt;
        heap.push_or_decrease(v, dist);
      }
    }
  }
}

std::vector<double> dijkstra(const NeighborhoodGraph& g, std::size_t source, std::size_t target) {
  std::vector<double> dist;
  NodeHeap heap(g.size());
  dijkstra_into(g, source, target, dist, heap);
  return dist;
}

}  // namespace

double graph_geodesic(const NeighborhoodGraph& g, std::size_t i, std::size_t j) {
  require(i < g.size() && j < g.size(), "node index out of range");
  if (i == j) return 0.0;
  return dijkstra(g, i, j)[j];
}

std::vector<double> shortest_paths_from(const NeighborhoodGraph& g, std::size_t source) {
  return dijkstra(g, source, g.size());
}

Eigen::MatrixXd all_pairs_geodesics(const NeighborhoodGraph& g) {
  const std::size_t n = g.size();
  Eigen::MatrixXd D(n, n);
  std::vector<double> dist;
  NodeHeap heap(n);
  for (std::size_t s = 0; s < n; ++s) {
    dijkstra_into(g, s, n, dist, heap);
    std::copy(dist.begin(), dist.end(), D.col(static_cast<Eigen::Index>(s)).data());
  }
  // Path sums accumulate in different orders from the two ends.
  D = D.cwiseMin(D.transpose()).eval();
  return D;
}

PluginMetric::PluginMetric(PointCloud base, double epsilon, double cap) : base_(std::move(base)), eps_(epsilon), cap_(cap) {
  require(epsilon > 0 && std::isfinite(epsilon), "offset radius must be positive");
  require(cap > 0 && !std::isnan(cap), "cap must be positive");
  require(!base_.empty(), "support estimate is empty");
  base_table_ = all_pairs_geodesics(build_graph(base_, 2.0 * eps_));
}

std::vector<std::pair<std::size_t, double>> PluginMetric::attach(const Point& x) const {
  std::vector<std::pair<std::size_t, double>> out;
  const auto& X = base_.matrix();
  for (Eigen::Index a = 0; a < X.cols(); ++a) {
    const double w = (X.col(a) - x).norm();
    if (w <= 2.0 * eps_) out.emplace_back(static_cast<std::size_t>(a), w);
  }
  return out;
}

double PluginMetric::operator()(const Point& x, const Point& y) const {
  require(x.size() == base_.dim() && y.size() == base_.dim(), "point dimension mismatch");
  require_finite(x);
  require_finite(y);
  const double chord = (x - y).norm();
  if (chord == 0.0) return 0.0;
  double best = chord <= 2.0 * eps_ ? chord : kInf;
  const auto nx = attach(x);
  const auto ny = attach(y);
  for (const auto& [a, da] : nx)
    for (const auto& [b, db] : ny)
      best = std::min(best, da + base_table_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) + db);
  return std::min(best, cap_);
}

double PluginMetric::reference(const Point& x, const Point& y) const {
  require(x.size() == base_.dim() && y.size() == base_.dim(), "point dimension mismatch");
  if ((x - y).norm() == 0.0) return 0.0;
  PointCloud aug = base_;
  aug.push_back(x);
  aug.push_back(y);
  const auto g = build_graph(aug, 2.0 * eps_);
  return std::min(graph_geodesic(g, base_.size(), base_.size() + 1), cap_);
}

LossReport sup_loss(const DistanceFn& d_hat, const DistanceFn& d_true, const std::vector<PointPair>& pairs) {
  LossReport rep;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double t = d_true(pairs[p].x, pairs[p].y);
    if (!(t > 0)) throw InvalidInput("sup-loss needs positive reference distances");
    const double ratio = d_hat(pairs[p].x, pairs[p].y) / t;
    const double loss = std::abs(1.0 - ratio);
    if (pairs[p].from_sample) rep.l_n = std::max(rep.l_n, loss);
    if (loss > rep.l_inf) {
      rep.l_inf = loss;
      rep.worst_pair = p;
      rep.worst_ratio = ratio;
    }
  }
  return rep;
}

LossReport sup_loss_table(const Eigen::MatrixXd& d_hat, const Eigen::MatrixXd& d_true) {
  require(d_hat.rows() == d_true.rows() && d_hat.cols() == d_true.cols() && d_hat.rows() == d_hat.cols(),
          "distance tables must have the same square shape");
  LossReport rep;
  const auto n = d_hat.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double t = d_true(i, j);
      if (!(t > 0)) throw InvalidInput("sup-loss needs positive reference distances");
      const double ratio = d_hat(i, j) / t;
      const double loss = std::abs(1.0 - ratio);
      if (loss > rep.l_inf) {
        rep.l_inf = loss;
        rep.worst_pair = static_cast<std::size_t>(i * n + j);
        rep.worst_ratio = ratio;
      }
    }
  rep.l_n = rep.l_inf;
  return rep;
}

double metric_distortion(const FiniteMetricSpace& K, const FiniteMetricSpace& Kp, double delta, double tol) {
  require(delta > 0, "scale must be positive");
  require(tol >= 0, "projection tolerance must be nonnegative");
  require(K.cloud.dim() == Kp.cloud.dim(), "point dimension mismatch");
  const std::size_t m = Kp.size();
  std::vector<std::vector<std::size_t>> proj(m);
  for (std::size_t i = 0; i < m; ++i) proj[i] = nearest_points(Kp.cloud.point(i), K.cloud, tol);

  double sup = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      if (Kp.chord(i, j) < delta) continue;
      const double num = Kp.dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      double den = kInf;
      for (auto a : proj[i])
        for (auto b : proj[j]) den = std::min(den, K.dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
      if (den == 0.0) {
        if (num > 0.0) return kInf;
        continue;
      }
      sup = std::max(sup, num / den);
    }
  return sup;
}

double mutual_distortion(const FiniteMetricSpace& K, const FiniteMetricSpace& Kp, double delta, double tol) {
  return std::max(metric_distortion(K, Kp, delta, tol), metric_distortion(Kp, K, delta, tol));
}

DistortionBracket distortion_sup_loss_bracket(const FiniteMetricSpace& space, const Eigen::MatrixXd& d_hat, double tol) {
  const auto loss = sup_loss_table(d_hat, space.dist);
  const auto n = static_cast<Eigen::Index>(space.size());
  double sep = kInf;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = space.chord(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (c > 0) sep = std::min(sep, c);
    }
  require(std::isfinite(sep), "bracket needs at least two distinct points");
  const FiniteMetricSpace hat(space.cloud, d_hat, false);
  DistortionBracket b;
  b.l_inf = loss.l_inf;
  b.lower = loss.l_inf + 1.0;
  b.value = mutual_distortion(space, hat, sep, tol);
  b.upper = loss.l_inf >= 1.0 ? kInf : 1.0 / (1.0 - loss.l_inf);
  return b;
}

}  // namespace reachkit
