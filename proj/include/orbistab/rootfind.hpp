#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "orbistab/errors.hpp"

namespace orbistab {

/// Brent's method on [a, b]; requires f(a) and f(b) to have opposite signs.
template <class F>
double brent(F&& f, double a, double b, double xtol = 1e-12, int max_iter = 200) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw NoBracket("brent: endpoints do not bracket a root");
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * 1e-16 * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
      d = m; e = m;
    } else {
      double p, q, r;
      double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d; d = p / q;
      } else {
        d = m; e = m;
      }
    }
    a = b; fa = fb;
    b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a; fc = fa;
      d = b - a; e = d;
    }
  }
  throw NumericError("brent: iteration budget exhausted");
}

/// Scans [a, b] on n uniform cells and returns all sign-change subintervals.
template <class F>
std::vector<std::pair<double, double>> bracket_scan(F&& f, double a, double b, int n) {
  std::vector<std::pair<double, double>> out;
  double xl = a, fl = f(a);
  for (int i = 1; i <= n; ++i) {
    const double xr = a + (b - a) * double(i) / double(n);
    const double fr = f(xr);
    if (fl == 0.0) out.emplace_back(xl, xl);
    else if (fl * fr < 0.0) out.emplace_back(xl, xr);
    xl = xr;
    fl = fr;
  }
  return out;
}

}  // namespace orbistab
