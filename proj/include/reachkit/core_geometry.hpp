#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <vector>

#include "reachkit/errors.hpp"

namespace reachkit {

using Point = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = 3.14159265358979323846;

void require_finite(const Point& x, const char* what = "point");

/// Ordered points of R^D stored column-wise. Coordinates are validated on entry.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(int dim, bool allow_empty = true);
  explicit PointCloud(Eigen::MatrixXd columns, bool allow_empty = false);
  PointCloud(const std::vector<Point>& points, int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return static_cast<std::size_t>(data_.cols()); }
  bool empty() const { return data_.cols() == 0; }

  Eigen::Ref<const Eigen::VectorXd> operator[](std::size_t i) const { return data_.col(static_cast<Eigen::Index>(i)); }
  Point point(std::size_t i) const { return data_.col(static_cast<Eigen::Index>(i)); }
  const Eigen::MatrixXd& matrix() const { return data_; }

  void push_back(const Point& x);
  void append(const PointCloud& other);

  /// Largest pairwise Euclidean distance (exhaustive).
  double diameter() const;

 private:
  int dim_ = 0;
  Eigen::MatrixXd data_;
};

/// Parameters of the statistical model: intrinsic dimension, smoothness, reach bound,
/// regularity bounds L_2..L_k and density bounds.
struct ModelParams {
  int d = 1;
  int k = 3;
  double rch_min = 1.0;
  std::vector<double> L;
  double f_min = 1.0;
  double f_max = 1.0;

  void validate(int ambient_dim) const;
};

/// A point cloud with a symmetric table of pairwise distances (+inf allowed).
struct FiniteMetricSpace {
  PointCloud cloud;
  Eigen::MatrixXd dist;
  bool intrinsic = true;

  FiniteMetricSpace() = default;
  FiniteMetricSpace(PointCloud c, Eigen::MatrixXd d, bool is_intrinsic = true);

  std::size_t size() const { return cloud.size(); }
  double chord(std::size_t i, std::size_t j) const { return (cloud[i] - cloud[j]).norm(); }

  /// The Euclidean metric on the cloud itself.
  static FiniteMetricSpace euclidean(const PointCloud& c);
};

/// Pairwise Euclidean distances, exhaustive.
Eigen::MatrixXd pairwise_distances(const PointCloud& c);

/// Great-circle distance at radius r between points at Euclidean distance `chord`.
double spherical_distance(double r, double chord);
double spherical_distance(double r, const Point& x, const Point& y);

double distance_to_set(const Point& u, const PointCloud& K);
double hausdorff_distance(const PointCloud& A, const PointCloud& B);

/// Indices within `tol` of the nearest distance. Negative tol selects 1e-9 * diam(K).
std::vector<std::size_t> nearest_points(const Point& u, const PointCloud& K, double tol = -1.0);

/// Volume of the unit d-ball.
double unit_ball_volume(int d);

/// Upper bound on the geodesic diameter of any manifold of the model.
double d_max_bound(const ModelParams& params);

/// Jung's bound relating diameter to the radius of the smallest enclosing ball.
double jung_bound(double diam, int D);

}  // namespace reachkit
