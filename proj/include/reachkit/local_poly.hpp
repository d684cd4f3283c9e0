#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "reachkit/core_geometry.hpp"

namespace reachkit {

/// Exponent vector of a monomial in d variables.
struct Monomial {
  std::vector<int> exps;

  int degree() const;
  double value(const Eigen::VectorXd& v) const;
  double partial(const Eigen::VectorXd& v, int a) const;
  double second_partial(const Eigen::VectorXd& v, int a, int b) const;
};

/// All monomials of exact degree j in d variables, in a fixed order.
std::vector<Monomial> monomials(int d, int j);

/// Homogeneous polynomial map R^d -> R^D of degree j; equivalently the symmetric
/// j-linear map T with T(v, ..., v) = value(v).
struct PolyTensor {
  int degree = 2;
  std::vector<Monomial> basis;
  Eigen::MatrixXd coef;  // D x basis.size()

  Eigen::VectorXd value(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& v) const;                     // D x d
  Eigen::VectorXd hessian_apply(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;  // D^2 p(v)[w, w]
  /// max over unit u of ||T(u, ..., u)||, which is the operator norm of a symmetric map.
  double opnorm(std::uint64_t seed = 0x5eed) const;
};

/// Symmetric bilinear map on R^d with values in R^D, stored entrywise.
struct QuadraticMap {
  int d = 1;
  int D = 2;
  std::vector<Eigen::VectorXd> coef;  // coef[a * d + b] = B(e_a, e_b)

  QuadraticMap() = default;
  QuadraticMap(int d_, int D_);
  Eigen::VectorXd operator()(const Eigen::VectorXd& u) const;
  Eigen::VectorXd& at(int a, int b) { return coef[static_cast<std::size_t>(a * d + b)]; }
  const Eigen::VectorXd& at(int a, int b) const { return coef[static_cast<std::size_t>(a * d + b)]; }
};

/// max over unit u of ||f(u)|| for f even or odd homogeneous: exact for d = 1, angle grid plus
/// golden-section refinement for d = 2, seeded multistart projected gradient ascent above.
double sphere_max(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, int d, std::uint64_t seed = 0x5eed,
                  int restarts = 64);
double tensor_opnorm(const QuadraticMap& B, std::uint64_t seed = 0x5eed);

struct FitConfig {
  int d = 1;
  int k = 3;
  double h = 0.1;
  double t = 2.5;  // tensor cap; t * h <= 1/4 keeps the recentered frames well posed
  int max_iters = 20;
  double tol = 1e-10;
};

struct LocalPatch {
  std::size_t base_index = 0;
  Point base;
  Eigen::MatrixXd basis;      // D x d orthonormal
  Eigen::MatrixXd projector;  // basis * basis^T
  std::vector<PolyTensor> tensors;  // degrees 2 .. k-1
  double h = 0.0;
  double t = 0.0;
  double objective = 0.0;
  double initial_objective = 0.0;  // tensors fitted on the PCA plane, before any update
  std::size_t window = 0;
  int iterations = 0;

  int d() const { return static_cast<int>(basis.cols()); }
  int D() const { return static_cast<int>(basis.rows()); }
};

double bandwidth(const ModelParams& params, std::size_t n, double C);

/// Alternating least squares for the local polynomial chart at sample i.
LocalPatch fit_patch(const PointCloud& cloud, std::size_t i, const FitConfig& cfg);

/// Fits every sample; points whose window is too sparse are skipped.
std::vector<LocalPatch> fit_all_patches(const PointCloud& cloud, const FitConfig& cfg, std::size_t* skipped = nullptr);

/// X_i + v + sum_j T^(j)(v, ..., v), with v in patch coordinates.
Point patch_eval(const LocalPatch& patch, const Eigen::VectorXd& v);

struct RecenteredFrame {
  Eigen::VectorXd v;
  Eigen::MatrixXd J;          // D x d, differential of the patch at v
  Eigen::MatrixXd tangent;    // D x d orthonormal basis of Im J
  Eigen::MatrixXd projector;  // onto Im J
  QuadraticMap tilde;         // half the second derivative, in tangent coordinates
  QuadraticMap sff;           // normal part of the second derivative, in tangent coordinates

  /// sff evaluated on an ambient vector of the tangent plane.
  Eigen::VectorXd sff_ambient(const Eigen::VectorXd& w) const;
};

RecenteredFrame recentered_frame(const LocalPatch& patch, const Eigen::VectorXd& v);

struct CurvatureEstimate {
  double R_ell_hat = kInf;
  bool flat = true;
  std::size_t arg_patch = 0;
  Eigen::VectorXd arg_v;
  std::vector<double> per_patch_radius;
};

CurvatureEstimate min_curvature_radius(const std::vector<LocalPatch>& patches, int grid = 9);

}  // namespace reachkit
