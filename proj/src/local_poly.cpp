#include "reachkit/local_poly.hpp"

#include <algorithm>
#include <cmath>

#include "reachkit/rng.hpp"

namespace reachkit {
namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

void enumerate_exponents(int d, int remaining, int var, std::vector<int>& cur, std::vector<Monomial>& out) {
  if (var == d - 1) {
    cur[static_cast<std::size_t>(var)] = remaining;
    out.push_back({cur});
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[static_cast<std::size_t>(var)] = e;
    enumerate_exponents(d, remaining - e, var + 1, cur, out);
  }
}

// Maximize a unimodal function on [a, b] by golden-section search.
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

Eigen::MatrixXd top_eigenvectors(const Eigen::MatrixXd& Y, int d) {
  const Eigen::MatrixXd S = Y * Y.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericFailure("eigen-decomposition failed in local PCA");
  return es.eigenvectors().rightCols(d);
}

struct FitState {
  Eigen::MatrixXd U;
  std::vector<PolyTensor> tensors;
  Eigen::MatrixXd fitted;  // D x m, sum of tensor terms at each window point
  double objective = 0.0;
};

}  // namespace

int Monomial::degree() const {
  int s = 0;
  for (int e : exps) s += e;
  return s;
}

double Monomial::value(const Eigen::VectorXd& v) const {
  double r = 1.0;
  for (std::size_t a = 0; a < exps.size(); ++a) r *= ipow(v(static_cast<Eigen::Index>(a)), exps[a]);
  return r;
}

double Monomial::partial(const Eigen::VectorXd& v, int a) const {
  const int ea = exps[static_cast<std::size_t>(a)];
  if (ea == 0) return 0.0;
  double r = ea;
  for (std::size_t b = 0; b < exps.size(); ++b)
    r *= ipow(v(static_cast<Eigen::Index>(b)), exps[b] - (static_cast<int>(b) == a ? 1 : 0));
  return r;
}

double Monomial::second_partial(const Eigen::VectorXd& v, int a, int b) const {
  std::vector<int> e = exps;
  double r = e[static_cast<std::size_t>(a)]--;
  r *= e[static_cast<std::size_t>(b)]--;
  if (r == 0.0) return 0.0;
  for (std::size_t c = 0; c < e.size(); ++c) r *= ipow(v(static_cast<Eigen::Index>(c)), e[c]);
  return r;
}

std::vector<Monomial> monomials(int d, int j) {
  require(d >= 1 && j >= 0, "monomials need d >= 1 and j >= 0");
  std::vector<Monomial> out;
  std::vector<int> cur(static_cast<std::size_t>(d), 0);
  enumerate_exponents(d, j, 0, cur, out);
  return out;
}

Eigen::VectorXd PolyTensor::value(const Eigen::VectorXd& v) const {
  Eigen::VectorXd m(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t q = 0; q < basis.size(); ++q) m(static_cast<Eigen::Index>(q)) = basis[q].value(v);
  return coef * m;
}

Eigen::MatrixXd PolyTensor::jacobian(const Eigen::VectorXd& v) const {
  const auto d = v.size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(basis.size()), d);
  for (std::size_t q = 0; q < basis.size(); ++q)
    for (Eigen::Index a = 0; a < d; ++a) M(static_cast<Eigen::Index>(q), a) = basis[q].partial(v, static_cast<int>(a));
  return coef * M;
}

Eigen::VectorXd PolyTensor::hessian_apply(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const {
  const auto d = static_cast<int>(v.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t q = 0; q < basis.size(); ++q)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) m(static_cast<Eigen::Index>(q)) += basis[q].second_partial(v, a, b) * w(a) * w(b);
  return coef * m;
}

double PolyTensor::opnorm(std::uint64_t seed) const {
  if (basis.empty()) return 0.0;
  const int d = static_cast<int>(basis.front().exps.size());
  return sphere_max([this](const Eigen::VectorXd& u) { return value(u); }, d, seed);
}

QuadraticMap::QuadraticMap(int d_, int D_) : d(d_), D(D_), coef(static_cast<std::size_t>(d_ * d_), Eigen::VectorXd::Zero(D_)) {}

Eigen::VectorXd QuadraticMap::operator()(const Eigen::VectorXd& u) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(D);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) out += at(a, b) * (u(a) * u(b));
  return out;
}

double sphere_max(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, int d, std::uint64_t seed, int restarts) {
  require(d >= 1, "sphere dimension must be positive");
  if (d == 1) {
    Eigen::VectorXd e(1);
    e(0) = 1.0;
    const double a = f(e).norm();
    e(0) = -1.0;
    return std::max(a, f(e).norm());
  }
  if (d == 2) {
    auto g = [&](double th) {
      Eigen::VectorXd u(2);
      u << std::cos(th), std::sin(th);
      return f(u).norm();
    };
    constexpr int kGrid = 256;
    const double step = 2.0 * kPi / kGrid;
    int arg = 0;
    double best = -1.0;
    for (int q = 0; q < kGrid; ++q) {
      const double val = g(q * step);
      if (val > best) {
        best = val;
        arg = q;
      }
    }
    const auto refined = golden_max(g, (arg - 1) * step, (arg + 1) * step, 1e-10);
    return std::max(best, refined.second);
  }

  // Projected gradient ascent of ||f||^2 on the unit sphere with central-difference gradients.
  auto F = [&](const Eigen::VectorXd& u) { return f(u).squaredNorm(); };
  CounterRng rng(seed);
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd u(d);
    for (int a = 0; a < d; ++a) u(a) = rng.normal();
    u.normalize();
    double Fu = F(u);
    double step = 1.0;
    for (int it = 0; it < 500 && step > 1e-14; ++it) {
      Eigen::VectorXd grad(d);
      for (int a = 0; a < d; ++a) {
        Eigen::VectorXd up = u, dn = u;
        up(a) += 1e-6;
        dn(a) -= 1e-6;
        grad(a) = (F(up) - F(dn)) / 2e-6;
      }
      grad -= u.dot(grad) * u;
      if (grad.norm() <= 1e-14 * std::max(1.0, Fu)) break;
      bool moved = false;
      while (step > 1e-14) {
        const Eigen::VectorXd cand = (u + step * grad / grad.norm()).normalized();
        const double Fc = F(cand);
        if (Fc > Fu) {
          const double gain = Fc - Fu;
          u = cand;
          Fu = Fc;
          step = std::min(1.0, 2.0 * step);
          moved = gain > 1e-20 * std::max(1.0, Fu);
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    best = std::max(best, Fu);
  }
  return std::sqrt(best);
}

double tensor_opnorm(const QuadraticMap& B, std::uint64_t seed) {
  return sphere_max([&B](const Eigen::VectorXd& u) { return B(u); }, B.d, seed);
}

double bandwidth(const ModelParams& p, std::size_t n, double C) {
  require(n >= 2, "bandwidth needs n >= 2");
  require(C > 0, "bandwidth constant must be positive");
  p.validate(0);
  const double nn = static_cast<double>(n);
  return std::pow(C * p.f_max * p.f_max * std::log(nn) / (p.f_min * p.f_min * p.f_min * nn), 1.0 / p.d);
}

LocalPatch fit_patch(const PointCloud& cloud, std::size_t i, const FitConfig& cfg) {
  const int D = cloud.dim();
  require(i < cloud.size(), "base index out of range");
  require(cfg.d >= 1 && cfg.d < D, "need 1 <= d < D");
  require(cfg.k >= 2, "order k must be >= 2");
  require(cfg.h > 0 && cfg.t > 0, "bandwidth and tensor cap must be positive");
  require(cfg.max_iters >= 0 && cfg.tol >= 0, "invalid iteration controls");

  const auto& X = cloud.matrix();
  const Point base = X.col(static_cast<Eigen::Index>(i));
  std::vector<Eigen::Index> idx;
  for (Eigen::Index p = 0; p < X.cols(); ++p)
    if (p != static_cast<Eigen::Index>(i) && (X.col(p) - base).norm() <= cfg.h) idx.push_back(p);
  const auto m = static_cast<Eigen::Index>(idx.size());
  if (m < cfg.d + 2)
    throw InsufficientData("patch " + std::to_string(i) + " has " + std::to_string(m) + " neighbors within h, needs " +
                           std::to_string(cfg.d + 2));
  Eigen::MatrixXd Y(D, m);
  for (Eigen::Index q = 0; q < m; ++q) Y.col(q) = X.col(idx[static_cast<std::size_t>(q)]) - base;
  const double norm = 1.0 / static_cast<double>(cloud.size() - 1);

  std::vector<std::vector<Monomial>> bases;
  Eigen::Index total = 0;
  for (int j = 2; j <= cfg.k - 1; ++j) {
    bases.push_back(monomials(cfg.d, j));
    total += static_cast<Eigen::Index>(bases.back().size());
  }

  // Tensors by least squares with the plane frozen, then the cap.
  auto solve = [&](const Eigen::MatrixXd& U) {
    FitState s;
    s.U = U;
    const Eigen::MatrixXd V = U.transpose() * Y;
    const Eigen::MatrixXd R = Y - U * V;
    s.fitted = Eigen::MatrixXd::Zero(D, m);
    if (total > 0) {
      Eigen::MatrixXd A(m, total);
      for (Eigen::Index q = 0; q < m; ++q) {
        Eigen::Index c = 0;
        for (const auto& b : bases)
          for (const auto& mono : b) A(q, c++) = mono.value(V.col(q));
      }
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
      const Eigen::MatrixXd C = cod.solve(R.transpose()).transpose();  // D x total
      Eigen::Index c = 0;
      for (std::size_t jj = 0; jj < bases.size(); ++jj) {
        PolyTensor T;
        T.degree = static_cast<int>(jj) + 2;
        T.basis = bases[jj];
        const auto w = static_cast<Eigen::Index>(T.basis.size());
        T.coef = C.middleCols(c, w);
        const double op = T.opnorm();
        const double capped = std::pow(cfg.t, T.degree - 1);
        if (op > capped) T.coef *= capped / op;
        s.fitted += T.coef * A.middleCols(c, w).transpose();
        c += w;
        s.tensors.push_back(std::move(T));
      }
    }
    s.objective = norm * (R - s.fitted).squaredNorm();
    return s;
  };

  FitState best = solve(top_eigenvectors(Y, cfg.d));
  LocalPatch patch;
  patch.initial_objective = best.objective;
  FitState cur = best;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    FitState next = solve(top_eigenvectors(Y - cur.fitted, cfg.d));
    const double change = std::abs(cur.objective - next.objective);
    const double scale = std::max(cur.objective, std::numeric_limits<double>::min());
    if (next.objective < best.objective) best = next;
    cur = std::move(next);
    if (change <= cfg.tol * scale) break;
  }

  patch.base_index = i;
  patch.base = base;
  patch.basis = best.U;
  patch.projector = best.U * best.U.transpose();
  patch.tensors = std::move(best.tensors);
  patch.h = cfg.h;
  patch.t = cfg.t;
  patch.objective = best.objective;
  patch.window = static_cast<std::size_t>(m);
  patch.iterations = it;
  return patch;
}

std::vector<LocalPatch> fit_all_patches(const PointCloud& cloud, const FitConfig& cfg, std::size_t* skipped) {
  std::vector<LocalPatch> out;
  std::size_t miss = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    try {
      out.push_back(fit_patch(cloud, i, cfg));
    } catch (const InsufficientData&) {
      ++miss;
    }
  }
  if (skipped) *skipped = miss;
  if (out.empty()) throw InsufficientData("no sample point has enough neighbors within the bandwidth");
  return out;
}

Point patch_eval(const LocalPatch& patch, const Eigen::VectorXd& v) {
  require(v.size() == patch.d(), "patch coordinate dimension mismatch");
  if (v.norm() > 0.875 * patch.h * (1.0 + 1e-12)) throw DomainError("patch evaluated outside ball(0, 7h/8)");
  Point x = patch.base + patch.basis * v;
  for (const auto& T : patch.tensors) x += T.value(v);
  return x;
}

Eigen::VectorXd RecenteredFrame::sff_ambient(const Eigen::VectorXd& w) const { return sff(tangent.transpose() * w); }

RecenteredFrame recentered_frame(const LocalPatch& patch, const Eigen::VectorXd& v) {
  const int d = patch.d(), D = patch.D();
  require(v.size() == d, "patch coordinate dimension mismatch");
  if (v.norm() > 0.25 * patch.h * (1.0 + 1e-12)) throw DomainError("recentered frame needs ||v|| <= h/4");
  if (patch.t * patch.h > 0.25 + 1e-12) throw DomainError("recentered frame needs t * h <= 1/4");

  RecenteredFrame fr;
  fr.v = v;
  fr.J = patch.basis;
  for (const auto& T : patch.tensors) fr.J += T.jacobian(v);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(fr.J);
  fr.tangent = qr.householderQ() * Eigen::MatrixXd::Identity(D, d);
  fr.projector = fr.tangent * fr.tangent.transpose();

  const Eigen::MatrixXd QJ = fr.tangent.transpose() * fr.J;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(QJ);
  const auto& sv = svd.singularValues();
  if (!(sv(d - 1) > 1e-8 * sv(0))) throw IllConditioned("patch differential is numerically singular");
  const Eigen::MatrixXd G = QJ.inverse();  // tangent coordinates -> patch coordinates

  // H[a][b] = second partial of the patch along patch axes a, b.
  std::vector<Eigen::VectorXd> H(static_cast<std::size_t>(d * d), Eigen::VectorXd::Zero(D));
  for (const auto& T : patch.tensors)
    for (std::size_t q = 0; q < T.basis.size(); ++q)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          const double s = T.basis[q].second_partial(v, a, b);
          if (s != 0.0) H[static_cast<std::size_t>(a * d + b)] += s * T.coef.col(static_cast<Eigen::Index>(q));
        }

  const Eigen::MatrixXd normal = Eigen::MatrixXd::Identity(D, D) - fr.projector;
  fr.tilde = QuadraticMap(d, D);
  fr.sff = QuadraticMap(d, D);
  for (int c = 0; c < d; ++c)
    for (int e = 0; e < d; ++e) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(D);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) acc += H[static_cast<std::size_t>(a * d + b)] * (G(a, c) * G(b, e));
      fr.tilde.at(c, e) = 0.5 * acc;
      fr.sff.at(c, e) = normal * acc;
    }
  return fr;
}

CurvatureEstimate min_curvature_radius(const std::vector<LocalPatch>& patches, int grid) {
  require(!patches.empty(), "no patches");
  require(grid >= 5, "grid needs at least 5 points per axis");
  CurvatureEstimate est;
  double kappa_max = 0.0;
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const auto& patch = patches[p];
    const int d = patch.d();
    const double r = 0.25 * patch.h;
    const double step = 2.0 * r / (grid - 1);
    auto kappa = [&](const Eigen::VectorXd& v) { return tensor_opnorm(recentered_frame(patch, v).sff); };

    double best = -1.0;
    Eigen::VectorXd arg = Eigen::VectorXd::Zero(d);
    std::vector<int> counter(static_cast<std::size_t>(d), 0);
    for (bool done = false; !done;) {
      Eigen::VectorXd v(d);
      for (int a = 0; a < d; ++a) v(a) = -r + step * counter[static_cast<std::size_t>(a)];
      if (v.norm() <= r * (1.0 + 1e-12)) {
        const double val = kappa(v);
        if (val > best) {
          best = val;
          arg = v;
        }
      }
      int a = 0;
      while (a < d && ++counter[static_cast<std::size_t>(a)] == grid) counter[static_cast<std::size_t>(a++)] = 0;
      done = a == d;
    }
    // One golden-section pass per axis around the grid maximizer, kept inside the ball.
    for (int a = 0; a < d; ++a) {
      const double rest = arg.squaredNorm() - arg(a) * arg(a);
      const double half = std::sqrt(std::max(0.0, r * r - rest));
      const double lo = std::max(arg(a) - step, -half), hi = std::min(arg(a) + step, half);
      if (!(hi > lo)) continue;
      Eigen::VectorXd probe = arg;
      auto line = [&](double s) {
        probe(a) = s;
        return kappa(probe);
      };
      const auto [s, val] = golden_max(line, lo, hi, 1e-6 * step);
      if (val > best) {
        best = val;
        arg(a) = s;
      }
    }
    const double radius = best * patch.h < 1e-9 ? kInf : 1.0 / best;
    est.per_patch_radius.push_back(radius);
    if (best > kappa_max) {
      kappa_max = best;
      est.arg_patch = p;
      est.arg_v = arg;
    }
  }
  est.flat = !std::isfinite(*std::min_element(est.per_patch_radius.begin(), est.per_patch_radius.end()));
  est.R_ell_hat = est.flat ? kInf : 1.0 / kappa_max;
  return est;
}

}  // namespace reachkit
