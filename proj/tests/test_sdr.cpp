#include <doctest.h>

#include <cmath>

#include "reachkit/geodesic_metric.hpp"
#include "reachkit/rng.hpp"
#include "reachkit/sdr.hpp"
#include "reachkit/synth.hpp"

using namespace reachkit;

namespace {

FiniteMetricSpace exact_space(const ShapeSpec& shape, std::size_t n, std::uint64_t seed) {
  const auto cloud = sample(shape, n, seed);
  return FiniteMetricSpace(cloud, oracle_distance_table(shape, cloud), true);
}

FiniteMetricSpace random_intrinsic(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd X(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) << rng.uniform(-1, 1), rng.uniform(-1, 1);
  const PointCloud c(X);
  Eigen::MatrixXd d = pairwise_distances(c);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) d(i, j) = d(j, i) = d(i, j) * rng.uniform(1.0, 1.8);
  return FiniteMetricSpace(c, d, true);
}

// Independent root finder: plain interval halving on phi(u) = c.
double bisect_phi(double c) {
  double lo = 1.0, hi = 1e7;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::asin(1.0 / mid) > c ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("phi and its inverse") {
  CHECK(phi(1.0) == doctest::Approx(kPi / 2));
  CHECK(phi(1e8) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(phi(0.9), InvalidInput);
  for (double c : {1.1, 1.3, 1.5}) CHECK(std::abs(phi(phi_inverse(c)) - c) < 1e-10);
  CHECK(phi_inverse(kPi / 2) == doctest::Approx(1.0));
  CHECK(phi_inverse(1.2) == doctest::Approx(bisect_phi(1.2)).epsilon(1e-10));
  CHECK_THROWS_AS(phi_inverse(1.0), InvalidInput);
  CHECK_THROWS_AS(phi_inverse(1.6), InvalidInput);
  double prev = kInf;
  for (double c = 1.01; c <= kPi / 2; c += 0.01) {
    const double u = phi_inverse(c);
    CHECK(u < prev);
    prev = u;
  }
  // Strictly decreasing on a grid.
  for (double u = 1.0; u < 100.0; u *= 1.1) CHECK(phi(u * 1.1) < phi(u));
  CHECK(phi_minus_one(1e6) == doctest::Approx(1.0 / (6e12)).epsilon(1e-6));
}

TEST_CASE("pair radius") {
  CHECK(std::isinf(pair_radius(1.0, 1.0)));
  CHECK(pair_radius(1.0, kPi / 2) == doctest::Approx(0.5));
  CHECK(pair_radius(1.0, 3.0) == 0.5);
  CHECK_THROWS_AS(pair_radius(1.0, 0.9), InvalidInput);
  // Circle pairs: chord = 2R sin(theta/2), geo = R theta.
  for (double R : {0.5, 1.0, 3.0})
    for (double theta = 0.05; theta < kPi; theta += 0.1)
      CHECK(pair_radius(2 * R * std::sin(theta / 2), R * theta) == doctest::Approx(R).epsilon(1e-9));

  CounterRng rng(2);
  for (int t = 0; t < 500; ++t) {
    const double chord = rng.uniform(0.1, 2.0);
    const double geo = chord * rng.uniform(1.0 + 1e-6, 1.5);
    const double r = pair_radius(chord, geo);
    REQUIRE(std::isfinite(r));
    CHECK(spherical_distance(r, chord) >= geo * (1 - 1e-12));
    if (r > chord / 2) CHECK(spherical_distance(r * (1 + 1e-6), chord) < geo);
  }
}

TEST_CASE("sdr on exact circles") {
  for (double R : {0.5, 1.0, 2.0}) {
    const auto space = exact_space(Circle{R}, 150, 7);
    for (double delta : {0.1 * R, 0.5 * R, R, 1.9 * R}) {
      const auto res = sdr_delta(space, delta);
      CHECK(res.value == doctest::Approx(R).epsilon(1e-9));
      CHECK(res.floor == delta / 2);
      CHECK(res.critical_pair.has_value());
    }
    CHECK(std::isinf(sdr_delta(space, 2.1 * R).value));
  }
}

TEST_CASE("sdr basic contract") {
  const auto space = random_intrinsic(25, 4);
  CHECK_THROWS_AS(sdr_delta(space, 0.0), InvalidInput);
  const FiniteMetricSpace shrunk(space.cloud, 0.5 * pairwise_distances(space.cloud), false);
  CHECK_THROWS_AS(sdr_delta(shrunk, 0.1), InvalidInput);
  const auto rec = sdr_delta(space, 0.3, true);
  CHECK(rec.value >= 0.15);
  double brute = kInf;
  for (const auto& p : rec.pair_radii) {
    CHECK(space.chord(p.i, p.j) >= 0.3);
    brute = std::min(brute, p.radius);
  }
  CHECK(rec.value == std::max(0.15, brute));
  CHECK(sdr_delta(space, 0.3).value == rec.value);
  // The Euclidean metric constrains nothing.
  CHECK(std::isinf(sdr_delta(FiniteMetricSpace::euclidean(space.cloud), 0.3).value));
}

TEST_CASE("sdr monotone in delta") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto space = random_intrinsic(30, 100 + s);
    double prev = 0.0;
    for (double delta = 0.05; delta < 3.0; delta += 0.05) {
      const double v = sdr_delta(space, delta).value;
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("wedge oracle") {
  const double astar = wedge_critical_angle();
  CHECK(astar == doctest::Approx(2 * std::asin(2 / kPi)));
  CHECK(wedge_sdr_oracle(astar, 0.4) == doctest::Approx(0.2));
  CHECK(wedge_sdr_oracle(kPi / 3, 0.4) == 0.2);
  CHECK(wedge_sdr_oracle(kPi - 1e-9, 0.4) > 1e3);
  CHECK_THROWS_AS(wedge_sdr_oracle(kPi, 0.4), InvalidInput);

  // Sampled wedges agree with the closed form.
  for (double alpha : {0.6 * astar, 1.5, 2.5}) {
    const Wedge w{alpha, 1.0};
    const auto cloud = wedge_grid(w, 120);
    const FiniteMetricSpace space(cloud, oracle_distance_table(w, cloud), true);
    const double delta = 0.5;
    CHECK(sdr_delta(space, delta).value == doctest::Approx(wedge_sdr_oracle(alpha, delta)).epsilon(0.01));
  }
}

TEST_CASE("stability constants") {
  CHECK(xi_bound(1.0, 1.0) == doctest::Approx(384 * (1 + kPi)));
  CHECK(xi_bound(2.0, 1.0) == doctest::Approx(16 * xi_bound(1.0, 1.0)));
  CHECK(xi_bound(0.0, 1.0) == 0.0);
  CHECK(lip_constant(1.0, 2.0, 1.0, 1.0, 1.0) == doctest::Approx(192 * (1 + kPi)));
  CHECK(lip_constant(3.0, 6.0, 3.0, 1.0, 1.0) == doctest::Approx(lip_constant(1.0, 2.0, 1.0, 1.0, 1.0)));
  CHECK(lip_constant(1.0, 2.0, 1.5, 2.0, 1.0) == doctest::Approx(0.5 * lip_constant(1.0, 2.0, 1.5, 1.0, 1.0)));

  const auto zero = stability_budget(0.5, 1.0, 0.0, 0.0, 1.0, 3.0 / 16, 2.0, 0.75);
  CHECK(zero.upsilon == 0.0);
  CHECK(zero.certified_deviation() == 0.0);
  CHECK(zero.applicable);

  const auto b = stability_budget(0.5, 1.0, 1e-6, 2e-6, 1.0, 3.0 / 16, 2.0, 0.75);
  const double xi0 = 384 * (1 + kPi) * std::pow(2.0 / 0.5, 4);
  const double L0 = 192 * 1.0 / ((3.0 / 16) * 0.125) * (2.0 + kPi * 1.0 / 0.5);
  CHECK(b.xi0 == doctest::Approx(xi0));
  CHECK(b.L0 == doctest::Approx(L0));
  CHECK(b.zeta0 == doctest::Approx(xi0 + 2 * L0));
  CHECK(b.upsilon == doctest::Approx(1.5e-6));
  const auto scaled = stability_budget(1.5, 3.0, 3e-6, 2e-6, 3.0, 3.0 / 16, 2.0, 2.25);
  CHECK(scaled.zeta0 == doctest::Approx(b.zeta0));
  CHECK(scaled.upsilon == doctest::Approx(3 * b.upsilon));
  CHECK_FALSE(stability_budget(0.5, 1.0, 1e-3, 0.0, 1.0, 3.0 / 16, 2.0, 0.75).applicable);
}

TEST_CASE("two-sided stability on perturbed circles") {
  const double delta0 = 0.5, delta1 = 1.0, delta = 0.75;
  std::size_t applied = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto K = exact_space(Circle{1.0}, 120, s);
    CounterRng rng(stream_key(99, s));
    const double eta = 2e-7;
    Eigen::MatrixXd Y = K.cloud.matrix();
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
      Eigen::Vector2d u;
      do u << rng.uniform(-1, 1), rng.uniform(-1, 1);
      while (u.norm() > 1);
      Y.col(j) += eta * u;
    }
    const PointCloud Kp_cloud(Y);
    const FiniteMetricSpace Kp(Kp_cloud, K.dist.cwiseMax(pairwise_distances(Kp_cloud)), true);
    const double eps = hausdorff_distance(K.cloud, Kp.cloud);
    const double nu = std::max(0.0, mutual_distortion(K, Kp, delta0) - 1.0);
    const auto b = stability_budget(delta0, delta1, eps, nu, sdr_delta(K, delta1).value, 3.0 / 16, kPi / 2, delta);
    if (!b.applicable) continue;
    ++applied;
    CHECK(std::abs(sdr_delta(K, delta).value - sdr_delta(Kp, delta).value) <= b.certified_deviation());
  }
  CHECK(applied >= 5);
}

TEST_CASE("empirical Lipschitz slope in delta") {
  for (const ShapeSpec& shape : {ShapeSpec{Circle{1.0}}, ShapeSpec{Sphere{2, 1.0}}}) {
    const auto space = exact_space(shape, 300, 3);
    const double L0 = lip_constant(0.5, 1.0, sdr_delta(space, 1.0).value, 3.0 / 16, kPi / 2);
    const double h = 0.02;
    for (double delta = 0.52; delta + h < 1.0; delta += 0.04) {
      const double slope = std::abs(sdr_delta(space, delta + h).value - sdr_delta(space, delta).value) / h;
      CHECK(slope <= L0);
    }
  }
}

TEST_CASE("spreadability") {
  const auto circle = sample(Circle{1.0}, 800, 2);
  CHECK(check_spreadable(circle, SpreadParams{1.0, 0.25, 3.0 / 16}, 200, 1).pass);
  // On a surface the smallest probe ball must still catch sample points.
  const auto sphere = sample(Sphere{2, 1.0}, 3000, 2);
  CHECK(check_spreadable(sphere, SpreadParams{0.5, 1.0, 3.0 / 16}, 100, 1).pass);
  PointCloud two(2);
  Point a(2), b(2);
  a << 0, 0;
  b << 0.5, 0;
  two.push_back(a);
  two.push_back(b);
  const auto v = check_spreadable(two, SpreadParams{1.0, 0.25, 3.0 / 16}, 10, 1);
  CHECK_FALSE(v.pass);
  CHECK_FALSE(v.counterexamples.empty());
}

TEST_CASE("sub-Euclidean check") {
  const auto space = exact_space(Circle{1.0}, 200, 5);
  const auto v = check_subeuclidean(space, 1.0, 2.0);
  CHECK(v.pass);
  CHECK(v.worst <= 1.05);
  CHECK(check_subeuclidean(FiniteMetricSpace::euclidean(space.cloud), 1.0, 1.0).pass);
  Eigen::MatrixXd d = pairwise_distances(space.cloud);
  std::size_t j = 1;
  while (d(0, static_cast<Eigen::Index>(j)) > 1.0) ++j;
  d(0, static_cast<Eigen::Index>(j)) = d(static_cast<Eigen::Index>(j), 0) = 3 * d(0, static_cast<Eigen::Index>(j));
  const auto bad = check_subeuclidean(FiniteMetricSpace(space.cloud, d, true), 1.0, 2.0);
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.counterexamples.size() == 1);
  CHECK(bad.counterexamples[0] == std::make_pair(std::size_t{0}, j));
}
