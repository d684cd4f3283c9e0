#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "reachkit/core_geometry.hpp"

namespace reachkit {

/// Undirected weighted graph in compressed adjacency form.
struct NeighborhoodGraph {
  double radius = 0.0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> targets;
  std::vector<double> weights;

  std::size_t size() const { return offsets.size() - 1; }
  std::size_t edge_count() const { return targets.size() / 2; }
  std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
};

struct WeightedEdge {
  std::size_t i, j;
  double w;
};

/// Exhaustive construction: edge (i, j) iff ||x_i - x_j|| <= rho, weighted by that length.
NeighborhoodGraph build_graph(const PointCloud& cloud, double rho);
NeighborhoodGraph graph_from_edges(std::size_t n, const std::vector<WeightedEdge>& edges);

/// Dijkstra with a binary heap; +inf when disconnected.
double graph_geodesic(const NeighborhoodGraph& g, std::size_t i, std::size_t j);
std::vector<double> shortest_paths_from(const NeighborhoodGraph& g, std::size_t source);
/// One Dijkstra per source; the result is symmetrized by taking the smaller entry.
Eigen::MatrixXd all_pairs_geodesics(const NeighborhoodGraph& g);

/// Plug-in geodesic metric: shortest path in the 2*epsilon graph on base ∪ {x, y},
/// truncated at `cap`. The base-to-base table is computed once at construction.
class PluginMetric {
 public:
  PluginMetric(PointCloud base, double epsilon, double cap);

  double operator()(const Point& x, const Point& y) const;
  /// Literal evaluation: builds the augmented graph and runs Dijkstra.
  double reference(const Point& x, const Point& y) const;

  /// Capped distances between base points.
  Eigen::MatrixXd sample_table() const { return base_table_.cwiseMin(cap_); }
  const Eigen::MatrixXd& raw_table() const { return base_table_; }

  const PointCloud& base() const { return base_; }
  double epsilon() const { return eps_; }
  double cap() const { return cap_; }

 private:
  std::vector<std::pair<std::size_t, double>> attach(const Point& x) const;

  PointCloud base_;
  double eps_;
  double cap_;
  Eigen::MatrixXd base_table_;
};

using DistanceFn = std::function<double(const Point&, const Point&)>;

struct PointPair {
  Point x, y;
  bool from_sample = false;
};

struct LossReport {
  double l_n = 0.0;    // over pairs flagged from_sample
  double l_inf = 0.0;  // over all pairs
  std::size_t worst_pair = 0;
  double worst_ratio = 1.0;
};

/// Multiplicative sup-loss max |1 - d_hat / d_true|.
LossReport sup_loss(const DistanceFn& d_hat, const DistanceFn& d_true, const std::vector<PointPair>& pairs);

/// Same loss for two tables over the off-diagonal pairs of one cloud.
LossReport sup_loss_table(const Eigen::MatrixXd& d_hat, const Eigen::MatrixXd& d_true);

/// One direction of the distortion: sup over delta-separated pairs of Kp of
/// dp(x', y') / inf d(pr_K x', pr_K y'). Projections use nearest_points with `tol`.
double metric_distortion(const FiniteMetricSpace& K, const FiniteMetricSpace& Kp, double delta, double tol = 0.0);

/// Symmetrized distortion max(D(d'|d), D(d|d')).
double mutual_distortion(const FiniteMetricSpace& K, const FiniteMetricSpace& Kp, double delta, double tol = 0.0);

struct DistortionBracket {
  double lower = 1.0;  // l_inf + 1
  double value = 1.0;  // distortion at the smallest positive separation
  double upper = 1.0;  // 1 / (1 - l_inf)_+
  double l_inf = 0.0;
  // The upper bound is attained when the worst ratio is below one; d/d_hat and
  // 1/(d_hat/d) may then round a couple of ulps apart, hence the relative slack.
  bool holds() const { return lower <= value * (1.0 + 1e-15) && value <= upper * (1.0 + 1e-15); }
};

DistortionBracket distortion_sup_loss_bracket(const FiniteMetricSpace& space, const Eigen::MatrixXd& d_hat, double tol = 0.0);

}  // namespace reachkit
