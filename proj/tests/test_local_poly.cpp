#include <doctest.h>

#include <cmath>

#include "reachkit/local_poly.hpp"
#include "reachkit/rng.hpp"
#include "reachkit/synth.hpp"

using namespace reachkit;

namespace {

PointCloud transformed(const PointCloud& c, const Eigen::MatrixXd& Q, const Eigen::VectorXd& shift, double scale) {
  Eigen::MatrixXd X = scale * (Q * c.matrix());
  X.colwise() += shift;
  return PointCloud(X);
}

PolyTensor random_tensor(int d, int D, int degree, CounterRng& rng) {
  PolyTensor T;
  T.degree = degree;
  T.basis = monomials(d, degree);
  T.coef.resize(D, static_cast<Eigen::Index>(T.basis.size()));
  for (Eigen::Index i = 0; i < T.coef.size(); ++i) T.coef(i) = rng.normal();
  return T;
}

// Naive symmetric multilinear evaluation: sum over all index tuples of the symmetric
// coefficient array built from the monomial coefficients.
Eigen::VectorXd naive_eval(const PolyTensor& T, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(T.coef.rows());
  for (std::size_t q = 0; q < T.basis.size(); ++q) {
    double term = 1.0;
    for (std::size_t a = 0; a < T.basis[q].exps.size(); ++a)
      for (int e = 0; e < T.basis[q].exps[a]; ++e) term *= v(static_cast<Eigen::Index>(a));
    out += term * T.coef.col(static_cast<Eigen::Index>(q));
  }
  return out;
}

}  // namespace

TEST_CASE("monomials") {
  CHECK(monomials(1, 3).size() == 1);
  CHECK(monomials(2, 2).size() == 3);
  CHECK(monomials(3, 2).size() == 6);
  CHECK(monomials(3, 3).size() == 10);
  for (const auto& m : monomials(3, 4)) CHECK(m.degree() == 4);
  Eigen::VectorXd v(2);
  v << 2.0, 3.0;
  const Monomial m{{2, 1}};
  CHECK(m.value(v) == 12.0);
  CHECK(m.partial(v, 0) == 12.0);
  CHECK(m.partial(v, 1) == 4.0);
  CHECK(m.second_partial(v, 0, 0) == 6.0);
  CHECK(m.second_partial(v, 0, 1) == 4.0);
  CHECK(m.second_partial(v, 1, 1) == 0.0);
}

TEST_CASE("operator norms") {
  // Isotropic map u -> c n0 |u|^2.
  for (int d : {1, 2, 3}) {
    QuadraticMap B(d, 4);
    Eigen::VectorXd n0 = Eigen::VectorXd::Zero(4);
    n0(3) = 1.0;
    for (int a = 0; a < d; ++a) B.at(a, a) = -2.5 * n0;
    CHECK(tensor_opnorm(B) == doctest::Approx(2.5).epsilon(1e-9));
  }
  QuadraticMap one(1, 3);
  one.at(0, 0) << 1.0, -2.0, 2.0;
  CHECK(tensor_opnorm(one) == 3.0);

  CounterRng rng(5);
  for (int t = 0; t < 5; ++t) {
    QuadraticMap B(2, 3);
    for (int a = 0; a < 2; ++a)
      for (int b = a; b < 2; ++b) {
        Eigen::VectorXd c(3);
        c << rng.normal(), rng.normal(), rng.normal();
        B.at(a, b) = c;
        B.at(b, a) = c;
      }
    double sweep = 0.0;
    for (int k = 0; k < 1000000; ++k) {
      const double th = kPi * k / 1000000.0;
      Eigen::VectorXd u(2);
      u << std::cos(th), std::sin(th);
      sweep = std::max(sweep, B(u).norm());
    }
    CHECK(std::abs(tensor_opnorm(B) - sweep) <= 1e-6 * sweep);
  }
}

TEST_CASE("bandwidth") {
  ModelParams p;
  p.d = 1;
  p.f_min = p.f_max = 1.0;
  CHECK(bandwidth(p, 3, 1.0) == doctest::Approx(std::log(3.0) / 3.0));
  CHECK(bandwidth(p, 1000, 1.0) < bandwidth(p, 100, 1.0));
  const double lambda = 2.0;
  p.d = 2;
  ModelParams q = p;
  q.f_min /= lambda * lambda;
  q.f_max /= lambda * lambda;
  CHECK(bandwidth(q, 500, 2.0) == doctest::Approx(lambda * bandwidth(p, 500, 2.0)));
}

TEST_CASE("patch evaluation") {
  CounterRng rng(3);
  LocalPatch patch;
  patch.base = Eigen::VectorXd::Random(4);
  patch.basis = Eigen::MatrixXd::Identity(4, 2);
  patch.h = 1.0;
  Eigen::VectorXd v(2);
  v << 0.3, -0.2;
  CHECK(patch_eval(patch, Eigen::VectorXd::Zero(2)) == patch.base);
  CHECK((patch_eval(patch, v) - (patch.base + patch.basis * v)).norm() < 1e-15);
  for (int deg = 2; deg <= 4; ++deg) patch.tensors.push_back(random_tensor(2, 4, deg, rng));
  Eigen::VectorXd expect = patch.base + patch.basis * v;
  for (const auto& T : patch.tensors) expect += naive_eval(T, v);
  CHECK((patch_eval(patch, v) - expect).norm() < 1e-12);
  v << 0.9, 0.0;
  CHECK_THROWS_AS(patch_eval(patch, v), DomainError);
}

TEST_CASE("fit on flat data") {
  CounterRng rng(8);
  Eigen::MatrixXd X(3, 300);
  for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) << rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0;
  const PointCloud cloud(X);
  FitConfig cfg;
  cfg.d = 2;
  cfg.k = 3;
  cfg.h = 0.4;
  cfg.t = 0.5;
  const auto patch = fit_patch(cloud, 0, cfg);
  Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
  P(0, 0) = P(1, 1) = 1.0;
  CHECK((patch.projector - P).norm() < 1e-6);
  CHECK(patch.tensors[0].opnorm() < 1e-6);
  const auto est = min_curvature_radius({patch});
  CHECK(est.flat);
  CHECK(std::isinf(est.R_ell_hat));

  cfg.h = 1e-3;
  CHECK_THROWS_AS(fit_patch(cloud, 0, cfg), InsufficientData);
}

TEST_CASE("fit on circles") {
  for (double R : {1.0, 2.0}) {
    const auto cloud = sample(Circle{R}, 2000, 4);
    FitConfig cfg;
    cfg.d = 1;
    cfg.k = 3;
    cfg.h = R / 4;
    cfg.t = 1.0 / (4 * cfg.h);
    for (std::size_t i : {0u, 10u, 100u}) {
      const auto patch = fit_patch(cloud, i, cfg);
      REQUIRE(patch.window >= 30);
      // Projector invariants.
      CHECK((patch.projector * patch.projector - patch.projector).norm() < 1e-10);
      CHECK((patch.projector - patch.projector.transpose()).norm() < 1e-10);
      CHECK(patch.projector.trace() == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(patch.objective <= patch.initial_objective);
      CHECK(patch.tensors[0].opnorm() <= cfg.t + 1e-9);
      // The patch stores the Taylor coefficient, half the curvature.
      CHECK(2 * patch.tensors[0].opnorm() == doctest::Approx(1.0 / R).epsilon(0.05));
      for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        Eigen::VectorXd v(1);
        v << s * patch.h / 4;
        const auto fr = recentered_frame(patch, v);
        CHECK(tensor_opnorm(fr.sff) == doctest::Approx(1.0 / R).epsilon(0.05));
        // sff is normal.
        Eigen::VectorXd u(1);
        u << 1.0;
        CHECK((fr.projector * fr.sff(u)).norm() <= 1e-8 * fr.sff(u).norm());
        // The differential stays close to the identity on the plane.
        CHECK((fr.J * u - patch.basis * u).norm() <= 0.5);
      }
    }
  }
}

TEST_CASE("tensor cap is enforced") {
  const auto cloud = sample(Circle{0.2}, 2000, 1);
  FitConfig cfg;
  cfg.d = 1;
  cfg.k = 3;
  cfg.h = 0.1;
  cfg.t = 1.0;  // the true Taylor coefficient 2.5 exceeds the cap
  const auto patch = fit_patch(cloud, 0, cfg);
  CHECK(patch.tensors[0].opnorm() <= cfg.t + 1e-9);
  CHECK(patch.tensors[0].opnorm() == doctest::Approx(cfg.t).epsilon(1e-6));
}

TEST_CASE("recentered frame") {
  CounterRng rng(12);
  LocalPatch patch;
  patch.base = Eigen::VectorXd::Zero(4);
  patch.basis = Eigen::MatrixXd::Identity(4, 2);
  patch.h = 0.2;
  patch.t = 1.0;
  auto frame0 = recentered_frame(patch, Eigen::VectorXd::Zero(2));
  Eigen::VectorXd u(2);
  u << 0.6, 0.8;
  CHECK(frame0.sff(u).norm() == 0.0);

  PolyTensor T = random_tensor(2, 4, 2, rng);
  T.coef.topRows(2).setZero();  // normal-valued, as fitted tensors are
  T.coef *= 0.5 / T.opnorm();
  patch.tensors.push_back(T);
  const auto fr = recentered_frame(patch, Eigen::VectorXd::Zero(2));
  CHECK((fr.J - patch.basis).norm() < 1e-15);
  const Eigen::VectorXd w = fr.tangent * u;  // ambient tangent vector
  const Eigen::VectorXd pu = patch.basis.transpose() * w;
  CHECK((fr.tilde(u) - T.value(pu)).norm() < 1e-12);
  CHECK((fr.sff(u) - 2.0 * (T.value(pu) - fr.projector * T.value(pu))).norm() < 1e-12);
  CHECK((fr.sff_ambient(w) - fr.sff(u)).norm() < 1e-12);

  Eigen::VectorXd far(2);
  far << 0.06, 0.0;
  CHECK_THROWS_AS(recentered_frame(patch, far), DomainError);
  patch.t = 2.0;
  CHECK_THROWS_AS(recentered_frame(patch, Eigen::VectorXd::Zero(2)), DomainError);

  // A degenerate differential is reported, not silently inverted.
  LocalPatch sing;
  sing.base = Eigen::VectorXd::Zero(2);
  sing.basis = Eigen::MatrixXd::Zero(2, 1);
  sing.basis(0, 0) = 1.0;
  sing.h = 0.2;
  sing.t = 1.0;
  PolyTensor L;
  L.degree = 2;
  L.basis = monomials(1, 2);
  L.coef = Eigen::MatrixXd::Zero(2, 1);
  L.coef(0, 0) = -1.0 / (2 * 0.04);  // d/dv (v - v^2 / 0.08) vanishes at v = 0.04
  sing.tensors.push_back(L);
  Eigen::VectorXd vs(1);
  vs << 0.04;
  CHECK_THROWS_AS(recentered_frame(sing, vs), IllConditioned);
}

TEST_CASE("curvature radius on circles and ellipses") {
  const auto cloud = sample(Circle{2.0}, 1000, 2);
  const auto params = model_params(Circle{2.0});
  FitConfig cfg;
  cfg.d = 1;
  cfg.k = 3;
  cfg.h = bandwidth(params, cloud.size(), 3.0);
  cfg.t = 1.0 / (4 * cfg.h);
  const auto patches = fit_all_patches(cloud, cfg);
  const auto est = min_curvature_radius(patches);
  CHECK_FALSE(est.flat);
  CHECK(est.R_ell_hat >= 1.9);
  CHECK(est.R_ell_hat <= 2.1);
  CHECK(est.per_patch_radius.size() == patches.size());
  CHECK_THROWS_AS(min_curvature_radius(patches, 4), InvalidInput);

  const auto ell = sample(Ellipse{2.0, 1.0}, 4000, 2);
  const auto ep = model_params(Ellipse{2.0, 1.0});
  cfg.h = bandwidth(ep, ell.size(), 3.0);
  cfg.t = 1.0 / (4 * cfg.h);
  const double r = min_curvature_radius(fit_all_patches(ell, cfg)).R_ell_hat;
  CHECK(r == doctest::Approx(0.5).epsilon(0.1));

  // Rigid motions leave the estimate unchanged; scaling scales it.
  const double theta = 0.7;
  Eigen::Matrix2d Q;
  Q << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::Vector2d shift(3.0, -1.0);
  const auto moved = transformed(ell, Q, shift, 1.0);
  CHECK(std::abs(min_curvature_radius(fit_all_patches(moved, cfg)).R_ell_hat - r) <= 1e-8);
  const double lambda = 1.5;
  FitConfig scaled = cfg;
  scaled.h *= lambda;
  scaled.t /= lambda;
  const auto big = transformed(ell, Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero(), lambda);
  CHECK(min_curvature_radius(fit_all_patches(big, scaled)).R_ell_hat == doctest::Approx(lambda * r).epsilon(1e-6));
}

TEST_CASE("curvature on a sphere") {
  const auto cloud = sample(Sphere{2, 1.0}, 3000, 4);
  FitConfig cfg;
  cfg.d = 2;
  cfg.k = 3;
  cfg.h = 0.3;
  cfg.t = 1.0 / (4 * cfg.h);
  std::vector<LocalPatch> patches;
  for (std::size_t i = 0; i < 60; ++i) patches.push_back(fit_patch(cloud, i, cfg));
  CHECK(min_curvature_radius(patches).R_ell_hat == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("curvature error shrinks with n on the circle") {
  std::vector<double> medians;
  for (std::size_t n : {250u, 500u, 1000u, 2000u}) {
    std::vector<double> errs;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto cloud = sample(Circle{1.0}, n, stream_key(17, s));
      FitConfig cfg;
      cfg.d = 1;
      cfg.k = 3;
      cfg.h = bandwidth(model_params(Circle{1.0}), n, 3.0);
      cfg.t = 1.0 / (4 * cfg.h);
      errs.push_back(std::abs(min_curvature_radius(fit_all_patches(cloud, cfg)).R_ell_hat - 1.0));
    }
    std::nth_element(errs.begin(), errs.begin() + 10, errs.end());
    medians.push_back(errs[10]);
  }
  int inversions = 0;
  for (std::size_t i = 1; i < medians.size(); ++i) inversions += medians[i] > medians[i - 1];
  MESSAGE("medians " << medians[0] << " " << medians[1] << " " << medians[2] << " " << medians[3]);
  CHECK(inversions <= 1);
}
