#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "reachkit/core_geometry.hpp"

namespace reachkit {

/// phi(u) = u * asin(1/u), a decreasing bijection [1, inf) -> (1, pi/2].
double phi(double u);
/// phi(u) - 1 without cancellation for large u.
double phi_minus_one(double u);
/// Unique u >= 1 with phi(u) = c, for c in (1, pi/2]. Returns +inf past the 1e9 clamp.
double phi_inverse(double c);
/// Same root, parametrized by the excess e = c - 1 so that c close to 1 keeps its digits.
double phi_inverse_excess(double e);

/// Largest radius r with geo <= 2 r asin(chord / 2r).
double pair_radius(double chord, double geo);

struct PairRadius {
  std::size_t i, j;
  double radius;
};

struct SdrResult {
  double value = kInf;
  double floor = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> critical_pair;
  std::vector<PairRadius> pair_radii;  // only filled on request
};

SdrResult sdr_delta(const FiniteMetricSpace& space, double delta, bool record_pairs = false);

/// Closed form for two segments meeting at angle alpha with the intrinsic metric.
double wedge_sdr_oracle(double alpha, double delta);
double wedge_critical_angle();

double xi_bound(double r, double delta0);
double lip_constant(double delta0, double delta1, double r1, double C0, double C1);

struct StabilityBudget {
  double delta0 = 0, delta1 = 0, delta = 0;
  double epsilon = 0, nu = 0;
  double upsilon = 0;
  double xi0 = 0, L0 = 0, zeta0 = 0;
  bool applicable = false;  // xi0 * upsilon <= 2 * sdr at delta1

  double certified_deviation() const { return zeta0 * upsilon; }
};

StabilityBudget stability_budget(double delta0, double delta1, double epsilon, double nu, double sdr_at_delta1, double C0,
                                 double C1, double delta);

struct SpreadParams {
  double Delta0 = 1.0;
  double eps0 = 0.25;
  double C0 = 3.0 / 16.0;
};

struct Verdict {
  bool pass = true;
  std::size_t checked = 0;
  double worst = 0.0;  // largest ratio found (sub-Euclidean check)
  std::vector<std::pair<std::size_t, std::size_t>> counterexamples;
};

/// Empirical spreadability: for random close pairs and eps in eps0 * {1, 1/2, 1/4},
/// looks for a sample point that pushes one endpoint away from the other.
Verdict check_spreadable(const PointCloud& cloud, const SpreadParams& params, std::size_t trials, std::uint64_t seed);

/// d(x, y) <= C1 ||x - y|| for every pair with ||x - y|| <= Delta1.
Verdict check_subeuclidean(const FiniteMetricSpace& space, double Delta1, double C1);

}  // namespace reachkit
