#include <doctest.h>

#include <cmath>

#include "reachkit/reach.hpp"
#include "reachkit/synth.hpp"

using namespace reachkit;

TEST_CASE("plug-in sdr on a circle") {
  for (double R : {1.0, 2.0}) {
    const auto cloud = sample(Circle{R}, 2000, 3);
    const auto params = model_params(Circle{R});
    const double s = sdr_plugin(cloud, params, 0.05 * R, 0.5 * R);
    CHECK(s == doctest::Approx(R).epsilon(0.03));
    CHECK(s < sdr_cap(params, 2));
  }
  const auto params = model_params(Circle{1.0});
  const auto cloud = sample(Circle{1.0}, 100, 3);
  CHECK_THROWS_AS(sdr_plugin(cloud, params, 0.1, 1.0), InvalidInput);
  CHECK_THROWS_AS(sdr_plugin(cloud, params, 0.1, 0.0), InvalidInput);
  CHECK_THROWS_AS(sdr_plugin(cloud, params, 0.0, 0.5), InvalidInput);
}

TEST_CASE("plug-in sdr on a sphere") {
  // The graph detour on a surface exceeds the curvature excess unless the edges are
  // long compared with the separation.
  const auto cloud = sample(Sphere{2, 1.0}, 3000, 5);
  const double s = sdr_plugin(cloud, model_params(Sphere{2, 1.0}), 0.35, 0.5);
  CHECK(s == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sdr cap") {
  const auto p = model_params(Circle{1.0});
  CHECK(sdr_cap(p, 2) == doctest::Approx(jung_bound(d_max_bound(p), 2)));
}

TEST_CASE("adaptive tuning") {
  const auto a = adaptive_tuning(1000, 1, 3);
  const double L = std::log(1000.0);
  CHECK(a.epsilon_n == doctest::Approx(L * std::pow(L / 1000.0, 3.0)));
  CHECK(a.delta_n == doctest::Approx(1.0 / L));
  const auto b = adaptive_tuning(5000, 2, 3);
  CHECK(b.epsilon_n == doctest::Approx(std::log(5000.0) * std::pow(std::log(5000.0) / 5000.0, 1.5)));
  CHECK(adaptive_tuning(100000, 2, 3).epsilon_n < b.epsilon_n);
  CHECK_THROWS_AS(adaptive_tuning(4, 1, 3), InvalidInput);
}

TEST_CASE("Federer oracle") {
  for (double R : {0.5, 1.0, 3.0}) {
    const Circle c{R};
    CHECK(oracle_reach_federer(sample(c, 500, 1), oracle(c).tangent) == doctest::Approx(R).epsilon(0.01));
  }
  const Sphere s{2, 1.5};
  CHECK(oracle_reach_federer(sample(s, 800, 2), oracle(s).tangent) == doctest::Approx(1.5).epsilon(0.02));
  Eigen::MatrixXd line(2, 20);
  for (Eigen::Index j = 0; j < 20; ++j) line.col(j) << 0.1 * j, 0.0;
  const auto flat = [](const Point&) { return Eigen::MatrixXd(Eigen::Vector2d(1.0, 0.0)); };
  CHECK(std::isinf(oracle_reach_federer(PointCloud(line), flat)));
  const Ellipse e{2.0, 1.0};
  CHECK(oracle_reach_federer(sample(e, 3000, 4), oracle(e).tangent) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("reach on a circle and under scaling") {
  for (double R : {1.0, 2.0}) {
    const auto cloud = sample(Circle{R}, 1500, 8);
    const auto rep = reach_estimate(cloud, model_params(Circle{R}));
    CHECK(rep.rch_hat == doctest::Approx(R).epsilon(0.05));
    CHECK(rep.rch_hat == std::min(rep.r_ell_hat, rep.sdr_hat));
    CHECK(rep.tuning.t == doctest::Approx(1.0 / (4 * rep.tuning.h)));
    CHECK(rep.tuning.delta == doctest::Approx(R / 2));
  }
}

TEST_CASE("reach regimes") {
  const Ellipse e{2.0, 1.0};
  const auto er = reach_estimate(sample(e, 2000, 11), model_params(e));
  CHECK(er.regime == "local");
  CHECK(er.rch_hat == doctest::Approx(0.5).epsilon(0.1));

  const Dumbbell db{};
  const auto dr = reach_estimate(sample(db, 2000, 11), model_params(db));
  CHECK(dr.regime == "global");
  CHECK(dr.rch_hat == doctest::Approx(oracle(db).reach).epsilon(0.1));
  CHECK(dr.r_ell_hat > 1.2 * dr.sdr_hat);
}

TEST_CASE("reach configuration") {
  const auto cloud = sample(Circle{1.0}, 400, 2);
  const auto params = model_params(Circle{1.0});
  ReachConfig cfg;
  cfg.delta = 0.3;
  cfg.epsilon_n = 0.1;
  cfg.h = 0.3;
  cfg.t = 0.5;
  const auto rep = reach_estimate(cloud, params, cfg);
  CHECK(rep.tuning.delta == 0.3);
  CHECK(rep.tuning.epsilon_n == 0.1);
  CHECK(rep.tuning.h == 0.3);
  CHECK(rep.tuning.t == 0.5);
  cfg.delta = 2.0;
  CHECK_THROWS_AS(reach_estimate(cloud, params, cfg), InvalidInput);
}
