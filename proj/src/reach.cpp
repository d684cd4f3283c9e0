#include "reachkit/reach.hpp"

#include <cmath>

#include "reachkit/geodesic_metric.hpp"
#include "reachkit/sdr.hpp"

namespace reachkit {

double sdr_cap(const ModelParams& params, int ambient_dim) { return jung_bound(d_max_bound(params), ambient_dim); }

double sdr_plugin(const PointCloud& cloud, const ModelParams& params, double epsilon_n, double delta) {
  params.validate(cloud.dim());
  require(delta > 0 && delta < params.rch_min, "delta must lie in (0, rch_min)");
  require(epsilon_n > 0, "epsilon_n must be positive");
  require(cloud.size() >= 2, "sdr needs at least two points");
  const PluginMetric metric(cloud, epsilon_n, d_max_bound(params));
  // A cap below a chord would break the intrinsic invariant; it only binds on failure events.
  const Eigen::MatrixXd chords = pairwise_distances(cloud);
  const FiniteMetricSpace space(cloud, metric.sample_table().cwiseMax(chords), true);
  return std::min(sdr_delta(space, delta).value, sdr_cap(params, cloud.dim()));
}

AdaptiveTuning adaptive_tuning(std::size_t n, int d, int k) {
  require(n >= 8, "adaptive tuning needs n >= 8");
  require(d >= 1 && k >= 2, "need d >= 1 and k >= 2");
  const double ln = std::log(static_cast<double>(n));
  return {ln * std::pow(ln / static_cast<double>(n), static_cast<double>(k) / d), 1.0 / ln};
}

ReachReport reach_estimate(const PointCloud& cloud, const ModelParams& params, const ReachConfig& cfg) {
  params.validate(cloud.dim());
  require(cfg.grid >= 5, "curvature grid needs at least 5 points per axis");
  const std::size_t n = cloud.size();
  require(n >= 8, "reach estimation needs at least 8 points");
  ReachReport rep;
  Tuning& tu = rep.tuning;

  if (cfg.adaptive) {
    // The plug-in support is the raw cloud, whose covering radius decays like (log n / n)^(1/d);
    // the offset keeps the log n factor but follows that exponent so the graph stays connected.
    const auto a = adaptive_tuning(n, params.d, params.k);
    const double ln = std::log(static_cast<double>(n));
    tu.epsilon_n = std::isnan(cfg.epsilon_n) ? ln * std::pow(ln / static_cast<double>(n), 1.0 / params.d) : cfg.epsilon_n;
    tu.delta = std::isnan(cfg.delta) ? a.delta_n : cfg.delta;
  } else {
    tu.epsilon_n = std::isnan(cfg.epsilon_n) ? bandwidth(params, n, cfg.eps_C) : cfg.epsilon_n;
    tu.delta = std::isnan(cfg.delta) ? params.rch_min / 2.0 : cfg.delta;
  }
  tu.h = std::isnan(cfg.h) ? bandwidth(params, n, cfg.h_C) : cfg.h;
  tu.t = std::isnan(cfg.t) ? 1.0 / (4.0 * tu.h) : cfg.t;

  FitConfig fit;
  fit.d = params.d;
  fit.k = params.k;
  fit.h = tu.h;
  fit.t = tu.t;
  const auto patches = fit_all_patches(cloud, fit, &rep.skipped_patches);
  if (patches.empty()) throw InsufficientData("no sample has enough neighbors within h to fit a patch");
  const auto curv = min_curvature_radius(patches, cfg.grid);
  rep.r_ell_hat = curv.R_ell_hat;
  rep.flat = curv.flat;

  rep.sdr_hat = sdr_plugin(cloud, params, tu.epsilon_n, tu.delta);
  rep.rch_hat = std::min(rep.r_ell_hat, rep.sdr_hat);
  if (std::abs(rep.r_ell_hat - rep.sdr_hat) < 1e-6 * rep.rch_hat || (std::isinf(rep.r_ell_hat) && std::isinf(rep.sdr_hat)))
    rep.regime = "tie";
  else
    rep.regime = rep.r_ell_hat < rep.sdr_hat ? "local" : "global";
  return rep;
}

double oracle_reach_federer(const PointCloud& cloud, const std::function<Eigen::MatrixXd(const Point&)>& tangent) {
  require(static_cast<bool>(tangent), "tangent oracle required");
  const auto& X = cloud.matrix();
  const Eigen::Index n = X.cols();
  double best = kInf;
  for (Eigen::Index p = 0; p < n; ++p) {
    const Eigen::MatrixXd T = tangent(X.col(p));
    for (Eigen::Index q = 0; q < n; ++q) {
      if (q == p) continue;
      const Eigen::VectorXd u = X.col(q) - X.col(p);
      const double len2 = u.squaredNorm();
      if (len2 == 0.0) continue;
      const double normal = (u - T * (T.transpose() * u)).norm();
      if (normal <= 1e-14 * std::sqrt(len2)) continue;  // flat direction
      best = std::min(best, len2 / (2.0 * normal));
    }
  }
  return best;
}

}  // namespace reachkit
