#include "reachkit/core_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace reachkit {

void require_finite(const Point& x, const char* what) {
  if (!x.allFinite()) throw InvalidInput(std::string(what) + " has non-finite coordinates");
}

PointCloud::PointCloud(int dim, bool allow_empty) : dim_(dim), data_(dim, 0) {
  require(dim >= 2, "ambient dimension must be at least 2");
  require(allow_empty, "empty point cloud");
}

PointCloud::PointCloud(Eigen::MatrixXd columns, bool allow_empty)
    : dim_(static_cast<int>(columns.rows())), data_(std::move(columns)) {
  require(dim_ >= 2, "ambient dimension must be at least 2");
  require(allow_empty || data_.cols() > 0, "empty point cloud");
  require(data_.allFinite(), "point cloud has non-finite coordinates");
}

PointCloud::PointCloud(const std::vector<Point>& points, int dim) : dim_(dim), data_(dim, static_cast<Eigen::Index>(points.size())) {
  require(dim >= 2, "ambient dimension must be at least 2");
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].size() == dim, "point dimension mismatch");
    require_finite(points[i]);
    data_.col(static_cast<Eigen::Index>(i)) = points[i];
  }
}

void PointCloud::push_back(const Point& x) {
  if (dim_ == 0) dim_ = static_cast<int>(x.size());
  require(x.size() == dim_, "point dimension mismatch");
  require_finite(x);
  data_.conservativeResize(dim_, data_.cols() + 1);
  data_.col(data_.cols() - 1) = x;
}

void PointCloud::append(const PointCloud& other) {
  if (other.empty()) return;
  if (dim_ == 0) dim_ = other.dim();
  require(other.dim() == dim_, "point dimension mismatch");
  const auto n0 = data_.cols();
  data_.conservativeResize(dim_, n0 + other.data_.cols());
  data_.rightCols(other.data_.cols()) = other.data_;
}

double PointCloud::diameter() const {
  double best = 0.0;
  for (Eigen::Index i = 0; i < data_.cols(); ++i)
    for (Eigen::Index j = i + 1; j < data_.cols(); ++j) best = std::max(best, (data_.col(i) - data_.col(j)).squaredNorm());
  return std::sqrt(best);
}

void ModelParams::validate(int ambient_dim) const {
  require(d >= 1, "intrinsic dimension must be >= 1");
  require(ambient_dim <= 0 || d < ambient_dim, "intrinsic dimension must be below the ambient one");
  require(k >= 2, "smoothness order must be >= 2");
  require(std::isfinite(rch_min) && rch_min > 0, "rch_min must be positive");
  require(std::isfinite(f_min) && f_min > 0 && f_min <= f_max && std::isfinite(f_max), "need 0 < f_min <= f_max");
  for (double l : L) require(std::isfinite(l) && l > 0, "regularity bounds must be positive");
}

FiniteMetricSpace::FiniteMetricSpace(PointCloud c, Eigen::MatrixXd d, bool is_intrinsic)
    : cloud(std::move(c)), dist(std::move(d)), intrinsic(is_intrinsic) {
  const auto n = static_cast<Eigen::Index>(cloud.size());
  require(dist.rows() == n && dist.cols() == n, "distance table shape does not match the cloud");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(dist(i, i) == 0.0, "distance table must vanish on the diagonal");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = dist(i, j), b = dist(j, i);
      require(!std::isnan(a) && a >= 0.0, "distances must be nonnegative");
      require(a == b || std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)), "distance table must be symmetric");
      if (intrinsic) {
        const double c = (cloud[static_cast<std::size_t>(i)] - cloud[static_cast<std::size_t>(j)]).norm();
        require(a >= c * (1.0 - 1e-12), "intrinsic distance below the chord");
      }
    }
  }
}

FiniteMetricSpace FiniteMetricSpace::euclidean(const PointCloud& c) { return FiniteMetricSpace(c, pairwise_distances(c), true); }

Eigen::MatrixXd pairwise_distances(const PointCloud& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  const auto& X = c.matrix();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (X.col(i) - X.col(j)).norm();
  return d;
}

double spherical_distance(double r, double chord) {
  require(std::isfinite(chord) && chord >= 0, "chord must be finite and nonnegative");
  require(r > 0, "radius must be positive");
  if (chord > 2.0 * r) return kInf;
  if (std::isinf(r)) return chord;
  return 2.0 * r * std::asin(std::min(1.0, chord / (2.0 * r)));
}

double spherical_distance(double r, const Point& x, const Point& y) {
  require_finite(x);
  require_finite(y);
  require(x.size() == y.size(), "point dimension mismatch");
  return spherical_distance(r, (x - y).norm());
}

double distance_to_set(const Point& u, const PointCloud& K) {
  require(!K.empty(), "distance to an empty set");
  require(u.size() == K.dim(), "point dimension mismatch");
  require_finite(u);
  return std::sqrt((K.matrix().colwise() - u).colwise().squaredNorm().minCoeff());
}

double hausdorff_distance(const PointCloud& A, const PointCloud& B) {
  require(!A.empty() && !B.empty(), "Hausdorff distance needs non-empty sets");
  require(A.dim() == B.dim(), "point dimension mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) h = std::max(h, distance_to_set(A.point(i), B));
  for (std::size_t j = 0; j < B.size(); ++j) h = std::max(h, distance_to_set(B.point(j), A));
  return h;
}

std::vector<std::size_t> nearest_points(const Point& u, const PointCloud& K, double tol) {
  require(!K.empty(), "projection onto an empty set");
  require(u.size() == K.dim(), "point dimension mismatch");
  require_finite(u);
  if (tol < 0) tol = 1e-9 * K.diameter();
  const Eigen::VectorXd dist = (K.matrix().colwise() - u).colwise().norm().transpose();
  const double best = dist.minCoeff();
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < dist.size(); ++i)
    if (dist(i) <= best + tol) out.push_back(static_cast<std::size_t>(i));
  return out;
}

double unit_ball_volume(int d) {
  require(d >= 0, "dimension must be nonnegative");
  const double h = 0.5 * d;
  return std::exp(h * std::log(kPi) - std::lgamma(h + 1.0));
}

double d_max_bound(const ModelParams& p) {
  p.validate(0);
  return std::pow(5.0, p.d) / (unit_ball_volume(p.d) * p.f_min * std::pow(p.rch_min, p.d - 1));
}

double jung_bound(double diam, int D) {
  require(diam >= 0, "diameter must be nonnegative");
  require(D >= 1, "dimension must be positive");
  return std::sqrt(static_cast<double>(D) / (2.0 * (D + 1))) * diam;
}

}  // namespace reachkit
