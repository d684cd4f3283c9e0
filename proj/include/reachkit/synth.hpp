#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "reachkit/core_geometry.hpp"

namespace reachkit {

struct Circle {
  double R = 1.0;
};
/// Round d-sphere of radius R in R^(d+1).
struct Sphere {
  int d = 2;
  double R = 1.0;
};
struct Ellipse {
  double a = 2.0;
  double b = 1.0;
};
/// Torus of revolution in R^3: core radius Rc, tube radius r.
struct Torus {
  double Rc = 3.0;
  double r = 1.0;
};
/// Two segments of length arm_length leaving the origin at angle alpha.
struct Wedge {
  double alpha = kPi / 2;
  double arm_length = 1.0;
};
/// Graph of the smoothed turn G_alpha on [0, 1], dilated by R / R_alpha.
struct TurnWidget {
  double alpha = kPi / 8;
  double R = 1.0;
};
/// Section of the cylinder of radius R near its apex (graph of sqrt(R^2 - w_1^2) over
/// w in R^d), pushed up by c eps^k K(w / eps). `ell` is the endpoint offset in units of eps.
struct BumpedCylinder {
  double R = 1.0;
  double ell = 4.0;
  double c = 0.5;
  double eps = 0.1;
  int k = 2;
  int d = 1;
};
/// Closed planar curve: two parallel neck segments at height +-w joined by concave arcs of
/// radius rho to two round lobes of radius `lobe`. Its reach is set by the neck.
struct Dumbbell {
  double w = 0.5;
  double rho = 1.5;
  double lobe = 1.5;
  double neck = 1.0;  // half-length of the straight neck
};

using ShapeSpec = std::variant<Circle, Sphere, Ellipse, Torus, Wedge, TurnWidget, BumpedCylinder, Dumbbell>;

void validate(const ShapeSpec& shape);
std::string shape_name(const ShapeSpec& shape);
/// Parses "circle" with "R=2", "torus" with "Rc=3,r=1", etc.
ShapeSpec parse_shape(const std::string& name, const std::string& params);

int intrinsic_dim(const ShapeSpec& shape);
int ambient_dim(const ShapeSpec& shape);

/// n i.i.d. points, uniform for the volume measure, deterministic in `seed`.
PointCloud sample(const ShapeSpec& shape, std::size_t n, std::uint64_t seed);

/// Evenly spaced points on each wedge arm, apex excluded: arm_length * i / per_arm, i = 1..per_arm.
PointCloud wedge_grid(const Wedge& w, std::size_t per_arm);

struct OracleSet {
  double reach = kInf;
  double wfs = kInf;
  double r_ell = kInf;
  double volume = 0.0;  // d-volume, for density bounds
  std::function<double(const Point&, const Point&)> geodesic;
  std::function<Eigen::MatrixXd(const Point&)> tangent;  // D x d orthonormal
  std::function<double(double)> mu_reach;                // wedge only
  bool approximate = false;                              // geodesics are numerical
};

OracleSet oracle(const ShapeSpec& shape);

/// Model parameters matching a shape sampled uniformly: rch_min = reach, f = 1 / volume.
ModelParams model_params(const ShapeSpec& shape, int k = 3);

/// Pairwise oracle geodesics between cloud points. Torus entries come from a parameter
/// grid graph, with pairs whose per-pair sphere radius falls below
/// `refine_factor * reach` polished by discrete path shortening.
Eigen::MatrixXd oracle_distance_table(const ShapeSpec& shape, const PointCloud& cloud, double refine_factor = 1.3);

/// Length of the discrete geodesic on the torus between two points, seeded by `path`
/// (parameter pairs (theta, phi), unwrapped, endpoints included).
double torus_polish_geodesic(const Torus& T, const std::vector<Eigen::Vector2d>& path, int nodes = 128);

// --- smoothed turn -------------------------------------------------------------

struct TurnProfile {
  double alpha;
  double R_alpha;  // 1 / sin(alpha)
  double slope;    // C'(1) = tan(alpha)
  double t_star;   // kink of the tangent envelope
  double h = 0.01;

  double C(double t) const;       // circular arc
  double Cprime(double t) const;
  double A(double t) const;       // tangent envelope
  double G(double t) const;       // kernel-smoothed envelope, by quadrature
  double Gprime(double t) const;  // closed forms through the kernel
  double Gsecond(double t) const;
};

TurnProfile turn_profile(double alpha);
/// Normalized kernel c0 exp(-1 / (1 - u^2)) on (-1, 1).
double bump_kernel(double u);

struct TurnCurve {
  TurnProfile profile;
  double scale;  // R / R_alpha
  std::vector<double> t;
  std::vector<double> g;
  PointCloud points;  // scale * (t, G(t))
};

TurnCurve turn_widget(double alpha, double R, std::size_t t_grid);

// --- bump perturbation ----------------------------------------------------------

/// Unnormalized kernel exp(-1 / (1 - |w|^2)) for |w| < 1, zero otherwise.
double bump_profile(const Eigen::VectorXd& w);
/// x = (w, h) in R^(d+1) -> x + c eps^k K(w / eps) e_(d+1).
Point bumped_cylinder_map(const BumpedCylinder& spec, const Point& x);
/// Height of the unperturbed section over w.
double cylinder_height(const BumpedCylinder& spec, const Eigen::VectorXd& w);

struct GeodesicGap {
  double gap;
  double d0;
  double deps;
};

GeodesicGap bump_geodesic_gap(const BumpedCylinder& spec, std::size_t n_graph = 4001);

}  // namespace reachkit
