#include "reachkit/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <sstream>

#include "reachkit/quadrature.hpp"
#include "reachkit/rng.hpp"
#include "reachkit/sdr.hpp"

namespace reachkit {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  return a < 0 ? a + 2.0 * kPi : a;
}

Eigen::MatrixXd column(double x, double y) {
  Eigen::MatrixXd m(2, 1);
  m << x, y;
  return m;
}

// ---- ellipse arclength -------------------------------------------------------

class EllipseArc {
 public:
  EllipseArc(double a, double b) : a_(a), b_(b), cum_(kPieces + 1, 0.0) {
    for (int p = 0; p < kPieces; ++p) cum_[p + 1] = cum_[p] + piece(p * step(), (p + 1) * step());
  }

  double perimeter() const { return cum_.back(); }
  double speed(double t) const { return std::hypot(a_ * std::sin(t), b_ * std::cos(t)); }

  double s_of_t(double t) const {
    t = wrap_angle(t);
    const int p = std::min(kPieces - 1, static_cast<int>(t / step()));
    return cum_[p] + piece(p * step(), t);
  }

  double t_of_s(double s) const {
    s = std::clamp(s, 0.0, perimeter());
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    const int p = std::clamp(static_cast<int>(it - cum_.begin()) - 1, 0, kPieces - 1);
    double t = p * step() + (s - cum_[p]) / speed(p * step() + 0.5 * step());
    for (int it2 = 0; it2 < 8; ++it2) t -= (cum_[p] + piece(p * step(), t) - s) / speed(t);
    return t;
  }

  double t_of_point(const Point& x) const { return wrap_angle(std::atan2(x(1) / b_, x(0) / a_)); }

  double geodesic(const Point& x, const Point& y) const {
    const double d = std::abs(s_of_t(t_of_point(x)) - s_of_t(t_of_point(y)));
    return std::min(d, perimeter() - d);
  }

 private:
  static constexpr int kPieces = 2048;
  double step() const { return 2.0 * kPi / kPieces; }
  double piece(double lo, double hi) const {
    return integrate_gl([this](double t) { return speed(t); }, lo, hi);
  }

  double a_, b_;
  std::vector<double> cum_;
};

// ---- piecewise circular curves -----------------------------------------------

struct Piece {
  bool arc = false;
  Eigen::Vector2d p0, p1;  // segment
  Eigen::Vector2d center;  // arc
  double radius = 0, a0 = 0, a1 = 0;

  double length() const { return arc ? radius * std::abs(a1 - a0) : (p1 - p0).norm(); }
  Eigen::Vector2d at(double s) const {
    if (!arc) return p0 + (p1 - p0) * (s / length());
    const double a = a0 + (a1 > a0 ? 1.0 : -1.0) * s / radius;
    return center + radius * Eigen::Vector2d(std::cos(a), std::sin(a));
  }
  Eigen::Vector2d tangent(double s) const {
    if (!arc) return (p1 - p0).normalized();
    const double sg = a1 > a0 ? 1.0 : -1.0;
    const double a = a0 + sg * s / radius;
    return sg * Eigen::Vector2d(-std::sin(a), std::cos(a));
  }
  // Local parameter of the closest point and its distance.
  std::pair<double, double> locate(const Eigen::Vector2d& x) const {
    if (!arc) {
      const Eigen::Vector2d u = p1 - p0;
      const double s = std::clamp((x - p0).dot(u) / u.squaredNorm(), 0.0, 1.0) * u.norm();
      return {s, (at(s) - x).norm()};
    }
    const double sg = a1 > a0 ? 1.0 : -1.0;
    const double sweep = std::abs(a1 - a0);
    const double rel = wrap_angle(sg * (std::atan2(x(1) - center(1), x(0) - center(0)) - a0));
    double s;
    if (rel <= sweep) {
      s = rel * radius;
    } else {
      s = (rel - sweep < 2.0 * kPi - rel) ? sweep * radius : 0.0;
    }
    return {s, (at(s) - x).norm()};
  }
};

class ClosedCurve {
 public:
  explicit ClosedCurve(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    cum_.push_back(0.0);
    for (const auto& p : pieces_) cum_.push_back(cum_.back() + p.length());
  }
  double length() const { return cum_.back(); }
  std::size_t index(double s) const {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    return std::min(pieces_.size() - 1, static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - cum_.begin() - 1)));
  }
  Eigen::Vector2d at(double s) const {
    const auto i = index(s);
    return pieces_[i].at(s - cum_[i]);
  }
  double locate(const Eigen::Vector2d& x, Eigen::Vector2d* tangent = nullptr) const {
    double best = kInf, arg = 0.0;
    std::size_t arg_piece = 0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const auto [s, dist] = pieces_[i].locate(x);
      if (dist < best) {
        best = dist;
        arg = s;
        arg_piece = i;
      }
    }
    if (tangent) *tangent = pieces_[arg_piece].tangent(arg);
    return cum_[arg_piece] + arg;
  }
  double geodesic(const Eigen::Vector2d& x, const Eigen::Vector2d& y) const {
    const double d = std::abs(locate(x) - locate(y));
    return std::min(d, length() - d);
  }

 private:
  std::vector<Piece> pieces_;
  std::vector<double> cum_;
};

ClosedCurve dumbbell_curve(const Dumbbell& s) {
  const double x0 = s.neck, w = s.w, rho = s.rho, Rl = s.lobe;
  const double X = x0 + std::sqrt((rho + Rl) * (rho + Rl) - (w + rho) * (w + rho));
  const double psi = std::atan2(-(w + rho), X - x0);
  auto seg = [](Eigen::Vector2d a, Eigen::Vector2d b) {
    Piece p;
    p.p0 = a;
    p.p1 = b;
    return p;
  };
  auto arc = [](Eigen::Vector2d c, double r, double a0, double a1) {
    Piece p;
    p.arc = true;
    p.center = c;
    p.radius = r;
    p.a0 = a0;
    p.a1 = a1;
    return p;
  };
  std::vector<Piece> ps;
  ps.push_back(seg({-x0, w}, {x0, w}));
  ps.push_back(arc({x0, w + rho}, rho, -kPi / 2, psi));
  ps.push_back(arc({X, 0.0}, Rl, psi + kPi, -(psi + kPi)));
  ps.push_back(arc({x0, -(w + rho)}, rho, -psi, kPi / 2));
  ps.push_back(seg({x0, -w}, {-x0, -w}));
  ps.push_back(arc({-x0, -(w + rho)}, rho, kPi / 2, psi + kPi));
  ps.push_back(arc({-X, 0.0}, Rl, psi + 2.0 * kPi, -psi));
  ps.push_back(arc({-x0, w + rho}, rho, kPi - psi, 1.5 * kPi));
  return ClosedCurve(std::move(ps));
}

// ---- torus geodesics -----------------------------------------------------------

Eigen::Vector3d torus_point(const Torus& T, double th, double ph) {
  const double rr = T.Rc + T.r * std::cos(th);
  return {rr * std::cos(ph), rr * std::sin(ph), T.r * std::sin(th)};
}

Eigen::Matrix<double, 3, 2> torus_jacobian(const Torus& T, double th, double ph) {
  const double rr = T.Rc + T.r * std::cos(th);
  Eigen::Matrix<double, 3, 2> J;
  J << -T.r * std::sin(th) * std::cos(ph), -rr * std::sin(ph), -T.r * std::sin(th) * std::sin(ph), rr * std::cos(ph),
      T.r * std::cos(th), 0.0;
  return J;
}

Eigen::Vector2d torus_params(const Torus& T, const Point& x) {
  const double ph = std::atan2(x(1), x(0));
  const double th = std::atan2(x(2), std::hypot(x(0), x(1)) - T.Rc);
  return {th, ph};
}

class TorusGrid {
 public:
  explicit TorusGrid(const Torus& T) : T_(T) {
    nt_ = 96;
    np_ = std::clamp(static_cast<int>(std::lround(nt_ * (T.Rc + T.r) / T.r)), nt_, 768);
    const int offs[][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {1, 2}, {1, -2}, {2, 1}, {2, -1}};
    adj_.resize(static_cast<std::size_t>(nt_ * np_));
    for (int i = 0; i < nt_; ++i)
      for (int j = 0; j < np_; ++j)
        for (const auto& o : offs) {
          const int a = node(i, j), b = node(i + o[0], j + o[1]);
          const double w = (lift(a) - lift(b)).norm();
          adj_[static_cast<std::size_t>(a)].emplace_back(b, w);
          adj_[static_cast<std::size_t>(b)].emplace_back(a, w);
        }
  }

  int node(int i, int j) const { return ((i % nt_ + nt_) % nt_) * np_ + ((j % np_ + np_) % np_); }
  Eigen::Vector2d params(int n) const { return {2.0 * kPi * (n / np_) / nt_, 2.0 * kPi * (n % np_) / np_}; }
  Eigen::Vector3d lift(int n) const {
    const auto p = params(n);
    return torus_point(T_, p(0), p(1));
  }
  int nearest(const Eigen::Vector2d& p) const {
    const int i = static_cast<int>(std::lround(wrap_angle(p(0)) / (2.0 * kPi) * nt_));
    const int j = static_cast<int>(std::lround(wrap_angle(p(1)) / (2.0 * kPi) * np_));
    return node(i, j);
  }

  // Dijkstra distances and predecessors from a node.
  void shortest(int src, std::vector<double>& dist, std::vector<int>& pred) const {
    const std::size_t n = adj_.size();
    dist.assign(n, kInf);
    pred.assign(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<std::size_t>(src)] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[static_cast<std::size_t>(u)]) continue;
      for (const auto& [v, w] : adj_[static_cast<std::size_t>(u)]) {
        if (du + w < dist[static_cast<std::size_t>(v)]) {
          dist[static_cast<std::size_t>(v)] = du + w;
          pred[static_cast<std::size_t>(v)] = u;
          heap.emplace(du + w, v);
        }
      }
    }
  }

  // Parameter path from (p_src) to (p_dst) through the predecessor tree, unwrapped.
  std::vector<Eigen::Vector2d> path(const Eigen::Vector2d& p_src, const Eigen::Vector2d& p_dst, int dst,
                                    const std::vector<int>& pred) const {
    std::vector<int> nodes;
    for (int v = dst; v >= 0; v = pred[static_cast<std::size_t>(v)]) nodes.push_back(v);
    std::reverse(nodes.begin(), nodes.end());
    std::vector<Eigen::Vector2d> out{p_src};
    auto unwrap = [&](Eigen::Vector2d q) {
      const auto& prev = out.back();
      for (int c = 0; c < 2; ++c) q(c) += 2.0 * kPi * std::round((prev(c) - q(c)) / (2.0 * kPi));
      return q;
    };
    for (std::size_t k = 1; k + 1 < nodes.size(); ++k) out.push_back(unwrap(params(nodes[k])));
    out.push_back(unwrap(p_dst));
    return out;
  }

 private:
  Torus T_;
  int nt_, np_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
};

double torus_geodesic_single(const Torus& T, const Point& x, const Point& y) {
  if ((x - y).norm() == 0.0) return 0.0;
  static thread_local std::unique_ptr<TorusGrid> grid;
  static thread_local double cached_Rc = -1, cached_r = -1;
  if (!grid || cached_Rc != T.Rc || cached_r != T.r) {
    grid = std::make_unique<TorusGrid>(T);
    cached_Rc = T.Rc;
    cached_r = T.r;
  }
  const auto px = torus_params(T, x), py = torus_params(T, y);
  std::vector<double> dist;
  std::vector<int> pred;
  const int src = grid->nearest(px), dst = grid->nearest(py);
  grid->shortest(src, dist, pred);
  return torus_polish_geodesic(T, grid->path(px, py, dst, pred));
}

// ---- misc --------------------------------------------------------------------

std::map<std::string, double> parse_kv(const std::string& params) {
  std::map<std::string, double> kv;
  std::stringstream ss(params);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::erase_if(item, [](unsigned char c) { return std::isspace(c); });
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidInput("shape parameter '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(val.c_str(), &end);
    if (val.empty() || *end != '\0') throw InvalidInput("shape parameter '" + key + "' has non-numeric value");
    kv[key] = v;
  }
  return kv;
}

double speed_weighted_t(CounterRng& rng, const std::vector<double>& cum, const std::vector<double>& grid) {
  const double s = rng.uniform() * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - cum.begin()), 1, cum.size() - 1);
  const double frac = (s - cum[i - 1]) / std::max(cum[i] - cum[i - 1], 1e-300);
  return grid[i - 1] + frac * (grid[i] - grid[i - 1]);
}

}  // namespace

// ---- specs -----------------------------------------------------------------------

void validate(const ShapeSpec& shape) {
  std::visit(Overloaded{
                 [](const Circle& s) { require(s.R > 0, "circle radius must be positive"); },
                 [](const Sphere& s) { require(s.d >= 1 && s.R > 0, "sphere needs d >= 1 and R > 0"); },
                 [](const Ellipse& s) { require(s.a >= s.b && s.b > 0, "ellipse needs a >= b > 0"); },
                 [](const Torus& s) { require(s.r > 0 && s.Rc > s.r, "torus needs Rc > r > 0"); },
                 [](const Wedge& s) {
                   require(s.alpha > 0 && s.alpha < kPi && s.arm_length > 0, "wedge needs alpha in (0, pi) and arms > 0");
                 },
                 [](const TurnWidget& s) { require(s.alpha > 0 && s.alpha <= kPi / 4 + 1e-15 && s.R > 0, "turn needs alpha in (0, pi/4]"); },
                 [](const BumpedCylinder& s) {
                   require(s.R > 0 && s.c > 0 && s.eps >= 0 && s.ell >= 1 && s.k >= 2 && s.d >= 1, "invalid bumped cylinder");
                   require(s.eps <= s.c * s.R, "bump needs eps <= c R");
                   require(s.ell * s.eps < s.R, "endpoints must lie on the section");
                 },
                 [](const Dumbbell& s) {
                   require(s.w > 0 && s.rho > 0 && s.lobe > s.w && s.neck > 0, "dumbbell needs lobe > w > 0, rho, neck > 0");
                 },
             },
             shape);
}

std::string shape_name(const ShapeSpec& shape) {
  static const char* names[] = {"circle", "sphere", "ellipse", "torus", "wedge", "turn", "bump", "dumbbell"};
  return names[shape.index()];
}

ShapeSpec parse_shape(const std::string& name, const std::string& params) {
  auto kv = parse_kv(params);
  auto get = [&](const char* key, double dflt) {
    const auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    const double v = it->second;
    kv.erase(it);
    return v;
  };
  ShapeSpec s;
  if (name == "circle") {
    s = Circle{get("R", 1.0)};
  } else if (name == "sphere") {
    s = Sphere{static_cast<int>(get("d", 2)), get("R", 1.0)};
  } else if (name == "ellipse") {
    s = Ellipse{get("a", 2.0), get("b", 1.0)};
  } else if (name == "torus") {
    s = Torus{get("Rc", 3.0), get("r", 1.0)};
  } else if (name == "wedge") {
    s = Wedge{get("alpha", kPi / 2), get("arm_length", 1.0)};
  } else if (name == "turn") {
    s = TurnWidget{get("alpha", kPi / 8), get("R", 1.0)};
  } else if (name == "bump") {
    BumpedCylinder b;
    b.R = get("R", 1.0);
    b.ell = get("ell", 4.0);
    b.c = get("c", 0.5);
    b.eps = get("eps", 0.1);
    b.k = static_cast<int>(get("k", 2));
    b.d = static_cast<int>(get("d", 1));
    s = b;
  } else if (name == "dumbbell") {
    s = Dumbbell{get("w", 0.5), get("rho", 1.5), get("lobe", 1.5), get("neck", 1.0)};
  } else {
    throw InvalidInput("unknown shape '" + name + "'");
  }
  if (!kv.empty()) throw InvalidInput("unknown parameter '" + kv.begin()->first + "' for shape " + name);
  validate(s);
  return s;
}

int intrinsic_dim(const ShapeSpec& shape) {
  return std::visit(Overloaded{
                        [](const Sphere& s) { return s.d; },
                        [](const Torus&) { return 2; },
                        [](const BumpedCylinder& s) { return s.d; },
                        [](const auto&) { return 1; },
                    },
                    shape);
}

int ambient_dim(const ShapeSpec& shape) {
  return std::visit(Overloaded{
                        [](const Sphere& s) { return s.d + 1; },
                        [](const Torus&) { return 3; },
                        [](const BumpedCylinder& s) { return s.d + 1; },
                        [](const auto&) { return 2; },
                    },
                    shape);
}

// ---- sampling ----------------------------------------------------------------

PointCloud sample(const ShapeSpec& shape, std::size_t n, std::uint64_t seed) {
  require(n >= 1, "sample size must be positive");
  validate(shape);
  CounterRng rng(seed);
  const int D = ambient_dim(shape);
  Eigen::MatrixXd X(D, static_cast<Eigen::Index>(n));
  std::visit(
      Overloaded{
          [&](const Circle& s) {
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
              const double t = rng.uniform(0.0, 2.0 * kPi);
              X.col(i) << s.R * std::cos(t), s.R * std::sin(t);
            }
          },
          [&](const Sphere& s) {
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
              Eigen::VectorXd g(D);
              do {
                for (int c = 0; c < D; ++c) g(c) = rng.normal();
              } while (g.norm() < 1e-12);
              X.col(i) = s.R * g / g.norm();
            }
          },
          [&](const Ellipse& s) {
            const EllipseArc arc(s.a, s.b);
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
              const double t = arc.t_of_s(rng.uniform() * arc.perimeter());
              X.col(i) << s.a * std::cos(t), s.b * std::sin(t);
            }
          },
          [&](const Torus& s) {
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
              double th, ph;
              do {
                th = rng.uniform(0.0, 2.0 * kPi);
                ph = rng.uniform(0.0, 2.0 * kPi);
              } while (rng.uniform() * (s.Rc + s.r) > s.Rc + s.r * std::cos(th));
              X.col(i) = torus_point(s, th, ph);
            }
          },
          [&](const Wedge& s) {
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
              const bool second = rng.uniform() < 0.5;
              const double t = rng.uniform() * s.arm_length;
              const double a = second ? s.alpha : 0.0;
              X.col(i) << t * std::cos(a), t * std::sin(a);
            }
          },
          [&](const TurnWidget& s) {
            const auto curve = turn_widget(s.alpha, s.R, 4001);
            std::vector<double> cum{0.0};
            for (std::size_t q = 1; q < curve.t.size(); ++q)
              cum.push_back(cum.back() + (curve.points[q] - curve.points[q - 1]).norm());
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
              const double t = speed_weighted_t(rng, cum, curve.t);
              X.col(i) << curve.scale * t, curve.scale * curve.profile.G(t);
            }
          },
          [&](const BumpedCylinder& s) {
            // Rejection on the area element sqrt(1 + |grad|^2) of the graph over a box in w.
            const double half = std::min(2.0 * s.ell * std::max(s.eps, 1e-3), 0.9 * s.R);
            auto height = [&](const Eigen::VectorXd& w) {
              Eigen::VectorXd x(s.d + 1);
              x.head(s.d) = w;
              x(s.d) = cylinder_height(s, w);
              return bumped_cylinder_map(s, x);
            };
            auto element = [&](const Eigen::VectorXd& w) {
              double g2 = 0.0;
              for (int a = 0; a < s.d; ++a) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(s.d);
                e(a) = 1e-6;
                const double der = (height(w + e)(s.d) - height(w - e)(s.d)) / 2e-6;
                g2 += der * der;
              }
              return std::sqrt(1.0 + g2);
            };
            double bound = 0.0;
            for (int q = 0; q <= 200; ++q) {
              Eigen::VectorXd w = Eigen::VectorXd::Zero(s.d);
              w(0) = -half + 2.0 * half * q / 200.0;
              bound = std::max(bound, element(w));
            }
            bound *= 1.5;
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
              Eigen::VectorXd w(s.d);
              do {
                for (int a = 0; a < s.d; ++a) w(a) = rng.uniform(-half, half);
              } while (rng.uniform() * bound > element(w));
              X.col(i) = height(w);
            }
          },
          [&](const Dumbbell& s) {
            const auto curve = dumbbell_curve(s);
            for (Eigen::Index i = 0; i < X.cols(); ++i) X.col(i) = curve.at(rng.uniform() * curve.length());
          },
      },
      shape);
  return PointCloud(std::move(X));
}

PointCloud wedge_grid(const Wedge& w, std::size_t per_arm) {
  validate(w);
  require(per_arm >= 1, "need at least one point per arm");
  Eigen::MatrixXd X(2, static_cast<Eigen::Index>(2 * per_arm));
  for (std::size_t i = 0; i < per_arm; ++i) {
    const double t = w.arm_length * static_cast<double>(i + 1) / static_cast<double>(per_arm);
    X.col(static_cast<Eigen::Index>(i)) << t, 0.0;
    X.col(static_cast<Eigen::Index>(per_arm + i)) << t * std::cos(w.alpha), t * std::sin(w.alpha);
  }
  return PointCloud(std::move(X));
}

// ---- oracles -----------------------------------------------------------------

OracleSet oracle(const ShapeSpec& shape) {
  validate(shape);
  OracleSet o;
  std::visit(
      Overloaded{
          [&](const Circle& s) {
            o.reach = o.wfs = o.r_ell = s.R;
            o.volume = 2.0 * kPi * s.R;
            o.geodesic = [R = s.R](const Point& x, const Point& y) {
              return 2.0 * R * std::asin(std::min(1.0, (x - y).norm() / (2.0 * R)));
            };
            o.tangent = [](const Point& x) { return Eigen::MatrixXd(column(-x(1), x(0)) / x.norm()); };
          },
          [&](const Sphere& s) {
            o.reach = o.wfs = o.r_ell = s.R;
            o.volume = unit_ball_volume(s.d + 1) * (s.d + 1) * std::pow(s.R, s.d);
            o.geodesic = [R = s.R](const Point& x, const Point& y) {
              return 2.0 * R * std::asin(std::min(1.0, (x - y).norm() / (2.0 * R)));
            };
            o.tangent = [](const Point& x) {
              const auto D = x.size();
              Eigen::MatrixXd A(D, D);
              A.col(0) = x.normalized();
              A.rightCols(D - 1) = Eigen::MatrixXd::Identity(D, D).leftCols(D - 1);
              // Re-orthonormalize with the normal first; the remaining columns span the tangent space.
              Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
              Eigen::MatrixXd Q = qr.householderQ();
              if (std::abs(x.normalized().dot(Q.col(0))) < 0.5) throw NumericFailure("sphere tangent basis failed");
              return Eigen::MatrixXd(Q.rightCols(D - 1));
            };
          },
          [&](const Ellipse& s) {
            auto arc = std::make_shared<EllipseArc>(s.a, s.b);
            o.r_ell = o.reach = s.b * s.b / s.a;
            o.wfs = s.b;
            o.volume = arc->perimeter();
            o.geodesic = [arc](const Point& x, const Point& y) { return arc->geodesic(x, y); };
            o.tangent = [arc, s](const Point& x) {
              const double t = arc->t_of_point(x);
              return Eigen::MatrixXd(column(-s.a * std::sin(t), s.b * std::cos(t)) / arc->speed(t));
            };
          },
          [&](const Torus& s) {
            o.reach = o.wfs = o.r_ell = std::min(s.r, s.Rc - s.r);
            o.volume = 4.0 * kPi * kPi * s.Rc * s.r;
            o.approximate = true;
            o.geodesic = [s](const Point& x, const Point& y) { return torus_geodesic_single(s, x, y); };
            o.tangent = [s](const Point& x) {
              const auto p = torus_params(s, x);
              Eigen::Matrix<double, 3, 2> J = torus_jacobian(s, p(0), p(1));
              J.col(0).normalize();
              J.col(1).normalize();
              return Eigen::MatrixXd(J);
            };
          },
          [&](const Wedge& s) {
            o.reach = 0.0;
            o.wfs = kInf;
            o.r_ell = kInf;
            o.volume = 2.0 * s.arm_length;
            const double alpha = s.alpha;
            auto second_arm = [alpha](const Point& x) {
              // Distance to each arm's line through the origin.
              const double d1 = std::abs(x(1));
              const double d2 = std::abs(-std::sin(alpha) * x(0) + std::cos(alpha) * x(1));
              return d2 < d1;
            };
            o.geodesic = [second_arm](const Point& x, const Point& y) {
              const double a = x.norm(), b = y.norm();
              if (a == 0.0 || b == 0.0 || second_arm(x) == second_arm(y)) return std::abs(a - b);
              return a + b;
            };
            o.tangent = [second_arm, alpha](const Point& x) {
              return second_arm(x) ? column(std::cos(alpha), std::sin(alpha)) : column(1.0, 0.0);
            };
            o.mu_reach = [alpha](double mu) { return mu >= std::sin(alpha / 2) ? 0.0 : kInf; };
          },
          [&](const TurnWidget& s) {
            const auto prof = turn_profile(s.alpha);
            const double scale = s.R / prof.R_alpha;
            // Curvature of the graph peaks at the kink of the envelope.
            const double gp = prof.Gprime(prof.t_star), gpp = prof.Gsecond(prof.t_star);
            o.r_ell = o.reach = scale * std::pow(1.0 + gp * gp, 1.5) / gpp;
            o.approximate = true;
            auto len = [prof](double t0, double t1) {
              if (t1 < t0) std::swap(t0, t1);
              return integrate_gl([&](double t) { return std::hypot(1.0, prof.Gprime(t)); }, t0, t1, 16);
            };
            o.volume = scale * len(0.0, 1.0);
            o.geodesic = [len, scale](const Point& x, const Point& y) { return scale * len(x(0) / scale, y(0) / scale); };
            o.tangent = [prof, scale](const Point& x) {
              const double g = prof.Gprime(x(0) / scale);
              return Eigen::MatrixXd(column(1.0, g) / std::hypot(1.0, g));
            };
          },
          [&](const BumpedCylinder& s) {
            o.approximate = true;
            o.reach = o.wfs = o.r_ell = kInf;  // depends on the bump; not tabulated
            if (s.d == 1) {
              auto height = [s](double w) {
                Eigen::VectorXd x(2);
                x << w, cylinder_height(s, Eigen::VectorXd::Constant(1, w));
                return bumped_cylinder_map(s, x)(1);
              };
              auto len = [height](double a, double b) {
                if (b < a) std::swap(a, b);
                return integrate_gl(
                    [&](double w) {
                      const double der = (height(w + 1e-7) - height(w - 1e-7)) / 2e-7;
                      return std::hypot(1.0, der);
                    },
                    a, b, 64);
              };
              o.geodesic = [len](const Point& x, const Point& y) { return len(x(0), y(0)); };
            }
          },
          [&](const Dumbbell& s) {
            auto curve = std::make_shared<ClosedCurve>(dumbbell_curve(s));
            o.reach = std::min({s.w, s.rho, s.lobe});
            o.wfs = std::min(s.w, s.lobe);
            o.r_ell = std::min(s.rho, s.lobe);
            o.volume = curve->length();
            o.geodesic = [curve](const Point& x, const Point& y) { return curve->geodesic(x.head<2>(), y.head<2>()); };
            o.tangent = [curve](const Point& x) {
              Eigen::Vector2d t;
              curve->locate(x.head<2>(), &t);
              return column(t(0), t(1));
            };
          },
      },
      shape);
  return o;
}

ModelParams model_params(const ShapeSpec& shape, int k) {
  const auto o = oracle(shape);
  ModelParams p;
  p.d = intrinsic_dim(shape);
  p.k = k;
  p.rch_min = std::isfinite(o.reach) && o.reach > 0 ? o.reach : 1.0;
  p.f_min = p.f_max = o.volume > 0 ? 1.0 / o.volume : 1.0;
  p.L.assign(static_cast<std::size_t>(std::max(0, k - 1)), 1.0 / p.rch_min);
  return p;
}

Eigen::MatrixXd oracle_distance_table(const ShapeSpec& shape, const PointCloud& cloud, double refine_factor) {
  const auto o = oracle(shape);
  require(cloud.dim() == ambient_dim(shape), "cloud dimension does not match the shape");
  require(static_cast<bool>(o.geodesic), "shape has no geodesic oracle");
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  if (!std::holds_alternative<Torus>(shape)) {
    std::vector<Point> pts;
    for (std::size_t i = 0; i < cloud.size(); ++i) pts.push_back(cloud.point(i));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& x = pts[static_cast<std::size_t>(i)];
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const auto& y = pts[static_cast<std::size_t>(j)];
        D(i, j) = D(j, i) = std::max(o.geodesic(x, y), (x - y).norm());
      }
    }
    return D;
  }

  const auto& T = std::get<Torus>(shape);
  const TorusGrid grid(T);
  std::vector<Eigen::Vector2d> params(static_cast<std::size_t>(n));
  std::vector<int> nodes(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    params[static_cast<std::size_t>(i)] = torus_params(T, cloud.point(static_cast<std::size_t>(i)));
    nodes[static_cast<std::size_t>(i)] = grid.nearest(params[static_cast<std::size_t>(i)]);
  }
  std::vector<double> dist;
  std::vector<int> pred;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    grid.shortest(nodes[si], dist, pred);
    const Eigen::Vector3d xi = cloud[si];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      const Eigen::Vector3d xj = cloud[sj];
      const double chord = (xi - xj).norm();
      if (chord == 0.0) continue;
      const double rough = std::max(chord, (xi - grid.lift(nodes[si])).norm() +
                                                 dist[static_cast<std::size_t>(nodes[sj])] +
                                                 (grid.lift(nodes[sj]) - xj).norm());
      double value = rough;
      if (pair_radius(chord, rough) < refine_factor * o.reach || nodes[si] == nodes[sj])
        value = std::max(chord, torus_polish_geodesic(T, grid.path(params[si], params[sj], nodes[sj], pred)));
      D(i, j) = D(j, i) = value;
    }
  }
  return D;
}

double torus_polish_geodesic(const Torus& T, const std::vector<Eigen::Vector2d>& path, int nodes) {
  require(path.size() >= 2, "path needs two endpoints");
  require(nodes >= 2, "need at least two segments");
  // Resample the parameter polyline at equal parameter-length steps.
  std::vector<double> cum{0.0};
  for (std::size_t k = 1; k < path.size(); ++k) cum.push_back(cum.back() + (path[k] - path[k - 1]).norm());
  const int N = nodes;
  std::vector<Eigen::Vector2d> p(static_cast<std::size_t>(N + 1));
  for (int k = 0; k <= N; ++k) {
    const double s = cum.back() * k / N;
    const auto it = std::upper_bound(cum.begin(), cum.end(), s);
    const std::size_t q = std::clamp<std::size_t>(static_cast<std::size_t>(it - cum.begin()), 1, path.size() - 1);
    const double span = cum[q] - cum[q - 1];
    const double f = span > 0 ? (s - cum[q - 1]) / span : 0.0;
    p[static_cast<std::size_t>(k)] = path[q - 1] + f * (path[q] - path[q - 1]);
  }
  p.front() = path.front();
  p.back() = path.back();

  auto energy = [&](const std::vector<Eigen::Vector2d>& q) {
    double e = 0.0;
    for (int k = 0; k < N; ++k)
      e += (torus_point(T, q[k + 1](0), q[k + 1](1)) - torus_point(T, q[k](0), q[k](1))).squaredNorm();
    return e;
  };

  // Damped Gauss-Newton on the discrete energy; the normal matrix is block tridiagonal.
  double E = energy(p);
  double mu = 1e-6;
  for (int it = 0; it < 200; ++it) {
    std::vector<Eigen::Vector3d> X(static_cast<std::size_t>(N + 1));
    std::vector<Eigen::Matrix<double, 3, 2>> J(static_cast<std::size_t>(N + 1));
    for (int k = 0; k <= N; ++k) {
      X[k] = torus_point(T, p[k](0), p[k](1));
      J[k] = torus_jacobian(T, p[k](0), p[k](1));
    }
    const int m = N - 1;
    if (m <= 0) break;
    std::vector<Eigen::Matrix2d> diag(static_cast<std::size_t>(m)), upper(static_cast<std::size_t>(m));
    std::vector<Eigen::Vector2d> rhs(static_cast<std::size_t>(m));
    for (int k = 1; k <= N - 1; ++k) {
      const Eigen::Vector3d r_prev = X[k] - X[k - 1], r_next = X[k + 1] - X[k];
      diag[k - 1] = 2.0 * J[k].transpose() * J[k];
      diag[k - 1] += mu * Eigen::Matrix2d::Identity() * (1.0 + diag[k - 1].trace());
      if (k < N - 1) upper[k - 1] = -J[k].transpose() * J[k + 1];
      rhs[k - 1] = -J[k].transpose() * (r_prev - r_next);
    }
    // Block Thomas elimination.
    for (int k = 1; k < m; ++k) {
      const Eigen::Matrix2d L = upper[k - 1].transpose() * diag[k - 1].inverse();
      diag[k] -= L * upper[k - 1];
      rhs[k] -= L * rhs[k - 1];
    }
    std::vector<Eigen::Vector2d> step(static_cast<std::size_t>(m));
    step[m - 1] = diag[m - 1].inverse() * rhs[m - 1];
    for (int k = m - 2; k >= 0; --k) step[k] = diag[k].inverse() * (rhs[k] - upper[k] * step[k + 1]);

    auto trial = p;
    double max_step = 0.0;
    for (int k = 1; k <= N - 1; ++k) {
      trial[k] += step[k - 1];
      max_step = std::max(max_step, step[k - 1].cwiseAbs().maxCoeff());
    }
    const double Et = energy(trial);
    if (Et <= E) {
      p = std::move(trial);
      const double gain = E - Et;
      E = Et;
      mu = std::max(mu * 0.3, 1e-12);
      if (max_step < 1e-12 || gain <= 1e-16 * E) break;
    } else {
      mu *= 10.0;
      if (mu > 1e8) break;
    }
  }
  double len = 0.0;
  for (int k = 0; k < N; ++k) len += (torus_point(T, p[k + 1](0), p[k + 1](1)) - torus_point(T, p[k](0), p[k](1))).norm();
  return len;
}

// ---- smoothed turn -------------------------------------------------------------

namespace {
double kernel_mass() {
  static const double Z =
      integrate_adaptive([](double u) { return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; }, -1.0, 1.0, 1e-15);
  return Z;
}
}  // namespace

double bump_kernel(double u) {
  if (!(std::abs(u) < 1.0)) return 0.0;
  return std::exp(-1.0 / (1.0 - u * u)) / kernel_mass();
}

TurnProfile turn_profile(double alpha) {
  require(alpha > 0 && alpha <= kPi / 4 + 1e-15, "turn angle must lie in (0, pi/4]");
  TurnProfile p;
  p.alpha = alpha;
  p.R_alpha = 1.0 / std::sin(alpha);
  p.slope = std::tan(alpha);
  p.t_star = p.R_alpha * std::tan(alpha / 2);
  return p;
}

double TurnProfile::C(double t) const { return R_alpha - std::sqrt(R_alpha * R_alpha - t * t); }
double TurnProfile::Cprime(double t) const { return t / std::sqrt(R_alpha * R_alpha - t * t); }
double TurnProfile::A(double t) const { return std::max(0.0, slope * (t - t_star)); }

double TurnProfile::G(double t) const {
  const double u = (t - t_star) / h;
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return A(t);
  // The envelope is linear on each side of the kink: integrate the positive part only.
  return slope * integrate_adaptive([&](double s) { return bump_kernel(s) * (t - t_star - h * s); }, -1.0, u, 1e-13);
}

double TurnProfile::Gprime(double t) const {
  const double u = (t - t_star) / h;
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return slope;
  return slope * integrate_adaptive([](double s) { return bump_kernel(s); }, -1.0, u, 1e-14);
}

double TurnProfile::Gsecond(double t) const { return slope / h * bump_kernel((t - t_star) / h); }

TurnCurve turn_widget(double alpha, double R, std::size_t t_grid) {
  require(R > 0, "turn scale must be positive");
  require(t_grid >= 2, "turn grid needs at least two points");
  TurnCurve c{turn_profile(alpha), 0.0, {}, {}, PointCloud(2)};
  c.scale = R / c.profile.R_alpha;
  Eigen::MatrixXd P(2, static_cast<Eigen::Index>(t_grid));
  for (std::size_t q = 0; q < t_grid; ++q) {
    const double t = static_cast<double>(q) / static_cast<double>(t_grid - 1);
    c.t.push_back(t);
    c.g.push_back(c.profile.G(t));
    P.col(static_cast<Eigen::Index>(q)) << c.scale * t, c.scale * c.g.back();
  }
  c.points = PointCloud(std::move(P));
  return c;
}

// ---- bump perturbation -----------------------------------------------------------

double bump_profile(const Eigen::VectorXd& w) {
  const double r2 = w.squaredNorm();
  return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
}

double cylinder_height(const BumpedCylinder& spec, const Eigen::VectorXd& w) {
  const double w1 = w(0);
  if (std::abs(w1) >= spec.R) throw DomainError("point outside the cylinder section");
  return std::sqrt(spec.R * spec.R - w1 * w1);
}

Point bumped_cylinder_map(const BumpedCylinder& spec, const Point& x) {
  require(x.size() == spec.d + 1, "point dimension mismatch");
  if (spec.eps == 0.0) return x;
  Point y = x;
  y(spec.d) += spec.c * std::pow(spec.eps, spec.k) * bump_profile(x.head(spec.d) / spec.eps);
  return y;
}

GeodesicGap bump_geodesic_gap(const BumpedCylinder& spec, std::size_t n_graph) {
  validate(spec);
  require(spec.d == 1 || spec.d == 2, "geodesic gap is implemented for d = 1 and d = 2");
  require(n_graph >= 16, "graph resolution too small");
  const double ell = spec.ell * std::max(spec.eps, 0.0);
  if (spec.eps == 0.0) return {0.0, 0.0, 0.0};

  // Regular grid over [-ell, ell]^d in w, lifted onto both graphs.
  const int side = spec.d == 1 ? static_cast<int>(n_graph) : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_graph))));
  const double s = 2.0 * ell / (side - 1);
  const double radius = 3.0 * s;
  if (radius > spec.eps / 4.0)
    throw ResolutionError("graph radius " + std::to_string(radius) + " exceeds eps/4; increase n_graph");

  const int reach_idx = 3;
  std::vector<Eigen::VectorXd> wgrid;
  for (int i = 0; i < side; ++i) {
    if (spec.d == 1) {
      wgrid.push_back(Eigen::VectorXd::Constant(1, -ell + s * i));
    } else {
      for (int j = 0; j < side; ++j) {
        Eigen::VectorXd w(2);
        w << -ell + s * i, -ell + s * j;
        wgrid.push_back(w);
      }
    }
  }
  auto lift = [&](const Eigen::VectorXd& w, bool bumped) {
    Point x(spec.d + 1);
    x.head(spec.d) = w;
    x(spec.d) = cylinder_height(spec, w);
    return bumped ? bumped_cylinder_map(spec, x) : x;
  };
  auto geodesic = [&](bool bumped) {
    const std::size_t n = wgrid.size();
    std::vector<Point> pts;
    pts.reserve(n);
    for (const auto& w : wgrid) pts.push_back(lift(w, bumped));
    auto id = [&](int i, int j) { return spec.d == 1 ? static_cast<std::size_t>(i) : static_cast<std::size_t>(i * side + j); };
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < (spec.d == 1 ? 1 : side); ++j)
        for (int di = 0; di <= reach_idx; ++di)
          for (int dj = (spec.d == 1 ? 0 : -reach_idx); dj <= (spec.d == 1 ? 0 : reach_idx); ++dj) {
            if (di == 0 && dj <= 0) continue;
            if (di * di + dj * dj > reach_idx * reach_idx) continue;
            const int i2 = i + di, j2 = j + dj;
            if (i2 >= side || j2 < 0 || (spec.d == 2 && j2 >= side)) continue;
            const auto a = id(i, j), b = id(i2, j2);
            const double w = (pts[a] - pts[b]).norm();
            adj[a].emplace_back(b, w);
            adj[b].emplace_back(a, w);
          }
    const std::size_t src = spec.d == 1 ? 0 : id(0, side / 2);
    const std::size_t dst = spec.d == 1 ? n - 1 : id(side - 1, side / 2);
    std::vector<double> dist(n, kInf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[u]) continue;
      if (u == dst) break;
      for (const auto& [v, w] : adj[u])
        if (du + w < dist[v]) {
          dist[v] = du + w;
          heap.emplace(du + w, v);
        }
    }
    return dist[dst];
  };
  GeodesicGap g;
  g.d0 = geodesic(false);
  g.deps = geodesic(true);
  g.gap = g.deps - g.d0;
  return g;
}

}  // namespace reachkit
