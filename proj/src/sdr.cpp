#include "reachkit/sdr.hpp"

#include <algorithm>
#include <cmath>

#include "reachkit/rng.hpp"

namespace reachkit {
namespace {

constexpr double kHalfPi = kPi / 2.0;
constexpr double kPhiClamp = 1e9;

}  // namespace

double phi(double u) {
  require(u >= 1.0, "phi is defined on [1, inf)");
  if (std::isinf(u)) return 1.0;
  return u * std::asin(1.0 / u);
}

double phi_minus_one(double u) {
  require(u >= 1.0, "phi is defined on [1, inf)");
  if (std::isinf(u)) return 0.0;
  const double z = 1.0 / u;
  if (z < 0.01) {
    // asin(z)/z - 1 as a power series in z^2.
    const double z2 = z * z;
    return z2 * (1.0 / 6 + z2 * (3.0 / 40 + z2 * (5.0 / 112 + z2 * (35.0 / 1152 + z2 * (63.0 / 2816)))));
  }
  return u * std::asin(z) - 1.0;
}

double phi_inverse_excess(double e) {
  require(e > 0.0 && e <= kHalfPi - 1.0 + 1e-15, "phi_inverse needs c in (1, pi/2]");
  if (e >= kHalfPi - 1.0) return 1.0;
  double lo = 1.0, hi = std::max(2.0, 2.0 / e);
  if (phi_minus_one(std::min(hi, 2.0 * kPhiClamp)) > e) return kInf;
  hi = std::min(hi, 2.0 * kPhiClamp);
  // Bisect to adjacent doubles and keep the side with phi(u) - 1 >= e, so the returned
  // sphere never undercuts the distance it was fitted to.
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (phi_minus_one(mid) > e ? lo : hi) = mid;
  }
  return lo > kPhiClamp ? kInf : lo;
}

double phi_inverse(double c) {
  require(c > 1.0 && c <= kHalfPi, "phi_inverse needs c in (1, pi/2]");
  return phi_inverse_excess(c - 1.0);
}

double pair_radius(double chord, double geo) {
  require(chord > 0.0 && std::isfinite(chord), "chord must be positive");
  require(!std::isnan(geo), "distance is NaN");
  if (geo < chord * (1.0 - 1e-12)) throw InvalidInput("distance below the chord: the metric is not intrinsic");
  if (geo <= chord) return kInf;
  if (geo >= kHalfPi * chord) return 0.5 * chord;
  return 0.5 * chord * phi_inverse_excess((geo - chord) / chord);
}

SdrResult sdr_delta(const FiniteMetricSpace& space, double delta, bool record_pairs) {
  require(delta > 0.0 && !std::isnan(delta), "scale must be positive");
  require(space.intrinsic, "spherical distortion radius needs an intrinsic metric");
  SdrResult res;
  res.floor = 0.5 * delta;
  const std::size_t n = space.size();
  const auto& X = space.cloud.matrix();
  double best = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = X.col(static_cast<Eigen::Index>(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double chord = (xi - X.col(static_cast<Eigen::Index>(j))).norm();
      if (chord < delta) continue;
      const double geo = space.dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      // A pair whose distance is clearly within the current sphere cannot lower the minimum;
      // borderline pairs are solved exactly so the result stays monotone in delta.
      if (!record_pairs && std::isfinite(best) && geo < spherical_distance(best, chord) * (1.0 - 1e-12)) {
        if (geo < chord * (1.0 - 1e-12)) throw InvalidInput("distance below the chord: the metric is not intrinsic");
        continue;
      }
      const double r = pair_radius(chord, geo);
      if (record_pairs) res.pair_radii.push_back({i, j, r});
      if (r < best) {
        best = r;
        res.critical_pair = std::make_pair(i, j);
      }
    }
  }
  res.value = std::isinf(best) ? kInf : std::max(res.floor, best);
  return res;
}

double wedge_critical_angle() { return 2.0 * std::asin(2.0 / kPi); }

double wedge_sdr_oracle(double alpha, double delta) {
  require(alpha > 0.0 && alpha < kPi, "wedge angle must lie in (0, pi)");
  require(delta > 0.0, "scale must be positive");
  if (alpha < wedge_critical_angle()) return 0.5 * delta;
  const double s = std::sin(0.5 * alpha);
  const double e = (1.0 - s) / s;
  if (e <= 0.0) return kInf;
  return 0.5 * delta * phi_inverse_excess(std::min(e, kHalfPi - 1.0));
}

double xi_bound(double r, double delta0) {
  require(r >= 0.0 && delta0 > 0.0, "xi needs r >= 0 and delta0 > 0");
  return 384.0 * (1.0 + kPi) * std::pow(r / delta0, 4);
}

double lip_constant(double delta0, double delta1, double r1, double C0, double C1) {
  require(delta0 > 0.0 && delta0 < delta1, "need 0 < delta0 < delta1");
  require(r1 > 0.0 && C0 > 0.0 && C1 > 0.0, "r1, C0, C1 must be positive");
  const double q = r1 / delta0;
  return 192.0 * q * q * q / C0 * (C1 + kPi * q);
}

StabilityBudget stability_budget(double delta0, double delta1, double epsilon, double nu, double sdr_at_delta1, double C0,
                                 double C1, double delta) {
  require(epsilon >= 0.0 && nu >= 0.0 && delta > 0.0, "budgets must be nonnegative");
  StabilityBudget b;
  b.delta0 = delta0;
  b.delta1 = delta1;
  b.delta = delta;
  b.epsilon = epsilon;
  b.nu = nu;
  b.upsilon = std::max(delta * nu, epsilon);
  b.xi0 = xi_bound(2.0 * sdr_at_delta1, delta0);
  b.L0 = lip_constant(delta0, delta1, sdr_at_delta1, C0, C1);
  b.zeta0 = b.xi0 + 2.0 * b.L0;
  b.applicable = b.xi0 * b.upsilon <= 2.0 * sdr_at_delta1;
  return b;
}

Verdict check_spreadable(const PointCloud& cloud, const SpreadParams& p, std::size_t trials, std::uint64_t seed) {
  require(p.Delta0 > 0 && p.eps0 > 0 && p.C0 > 0, "spreadability parameters must be positive");
  Verdict v;
  const std::size_t n = cloud.size();
  const auto& X = cloud.matrix();
  if (n == 0) {
    v.pass = false;
    return v;
  }
  // Close pairs (x = y included: a discrete set already fails there), enumerated
  // exhaustively then subsampled.
  std::vector<std::pair<std::size_t, std::size_t>> close;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      if ((X.col(static_cast<Eigen::Index>(i)) - X.col(static_cast<Eigen::Index>(j))).norm() <= p.Delta0) close.emplace_back(i, j);
  CounterRng rng(seed);
  const std::size_t m = std::min(trials, close.size());
  for (std::size_t t = 0; t < m; ++t) {
    const auto [i, j] = trials >= close.size() ? close[t] : close[rng.below(close.size())];
    const auto x = X.col(static_cast<Eigen::Index>(i));
    const auto y = X.col(static_cast<Eigen::Index>(j));
    const double dxy = (x - y).norm();
    for (double eps : {p.eps0, 0.5 * p.eps0, 0.25 * p.eps0}) {
      ++v.checked;
      bool found = false;
      for (Eigen::Index a = 0; a < X.cols() && !found; ++a) {
        const auto z = X.col(a);
        const double ay = (z - y).norm(), ax = (z - x).norm();
        found = (ay <= eps && ax >= dxy + p.C0 * eps) || (ax <= eps && ay >= dxy + p.C0 * eps);
      }
      if (!found) {
        v.pass = false;
        v.counterexamples.emplace_back(i, j);
        break;
      }
    }
  }
  return v;
}

Verdict check_subeuclidean(const FiniteMetricSpace& space, double Delta1, double C1) {
  require(Delta1 > 0 && C1 > 0, "sub-Euclidean parameters must be positive");
  Verdict v;
  const std::size_t n = space.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = space.chord(i, j);
      if (c > Delta1 || c == 0.0) continue;
      ++v.checked;
      const double ratio = space.dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / c;
      v.worst = std::max(v.worst, ratio);
      if (ratio > C1) {
        v.pass = false;
        v.counterexamples.emplace_back(i, j);
      }
    }
  return v;
}

}  // namespace reachkit
