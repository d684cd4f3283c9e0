#pragma once

#include <functional>
#include <string>

#include "reachkit/core_geometry.hpp"
#include "reachkit/local_poly.hpp"

namespace reachkit {

struct Tuning {
  double epsilon_n = 0.0;
  double delta = 0.0;
  double h = 0.0;
  double t = 0.0;
};

struct ReachReport {
  double rch_hat = kInf;
  double r_ell_hat = kInf;
  double sdr_hat = kInf;
  std::string regime;  // "local", "global" or "tie"
  bool flat = false;   // every fitted patch had zero curvature
  std::size_t skipped_patches = 0;
  Tuning tuning;
};

/// Unset (NaN) fields take their defaults from the model parameters and n.
struct ReachConfig {
  double delta = kNaN;      // rch_min / 2
  double epsilon_n = kNaN;  // bandwidth(params, n, eps_C)
  double h = kNaN;          // bandwidth(params, n, h_C)
  double t = kNaN;          // 1 / (4 h)
  double eps_C = 2.0;
  double h_C = 3.0;
  int grid = 9;
  bool adaptive = false;  // log-n tuning for epsilon_n and delta
};

/// Upper bound on the SDR of any admissible shape: Jung's bound on the geodesic diameter bound.
double sdr_cap(const ModelParams& params, int ambient_dim);

/// SDR of the plug-in metric on the cloud, capped at sdr_cap.
double sdr_plugin(const PointCloud& cloud, const ModelParams& params, double epsilon_n, double delta);

ReachReport reach_estimate(const PointCloud& cloud, const ModelParams& params, const ReachConfig& cfg = {});

struct AdaptiveTuning {
  double epsilon_n;
  double delta_n;
};

/// epsilon_n = log n (log n / n)^(k/d), delta_n = 1 / log n.
AdaptiveTuning adaptive_tuning(std::size_t n, int d, int k);

/// Test oracle: min over sample pairs of |p - q|^2 / (2 dist(q - p, T_p)); +inf when every
/// pair is flat.
double oracle_reach_federer(const PointCloud& cloud, const std::function<Eigen::MatrixXd(const Point&)>& tangent);

}  // namespace reachkit
