#pragma once

#include <array>
#include <cmath>

#include "reachkit/errors.hpp"

namespace reachkit {

/// Composite 10-point Gauss-Legendre rule on `pieces` equal subintervals.
template <class F>
double integrate_gl(F&& f, double a, double b, int pieces = 1) {
  static constexpr std::array<double, 5> x = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                              0.8650633666889845, 0.9739065285171717};
  static constexpr std::array<double, 5> w = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                              0.1494513491505806, 0.0666713443086881};
  const double step = (b - a) / pieces;
  double total = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double lo = a + p * step;
    const double mid = lo + 0.5 * step, half = 0.5 * step;
    double s = 0.0;
    for (std::size_t q = 0; q < x.size(); ++q) s += w[q] * (f(mid - half * x[q]) + f(mid + half * x[q]));
    total += half * s;
  }
  return total;
}

namespace detail {

template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  if (depth <= 0) throw NumericFailure("adaptive quadrature did not converge");
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson with Richardson correction to absolute tolerance `tol`.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = 1e-12, int max_depth = 40) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace reachkit
