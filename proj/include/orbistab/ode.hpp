#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

#include "orbistab/errors.hpp"

namespace orbistab {

/// One classical fixed RK4 step. `f(t, x)` returns dx/dt; V is any Eigen
/// vector type (or double).
template <class F, class V>
V rk4_step(F&& f, double t, const V& x, double h) {
  const V k1 = f(t, x);
  const V k2 = f(t + 0.5 * h, V(x + 0.5 * h * k1));
  const V k3 = f(t + 0.5 * h, V(x + 0.5 * h * k2));
  const V k4 = f(t + h, V(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct AdaptiveOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;   // 0: pick from the span
  double h_min = 0.0;    // 0: 1e-14 * |span|
  double h_max = 0.0;    // 0: |span|
  std::int64_t max_steps = 2'000'000;
};

namespace detail {

template <class V>
double error_norm(const V& err, const V& x0, const V& x1, double atol, double rtol) {
  double acc = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(x0[i]), std::abs(x1[i]));
    const double e = err[i] / sc;
    acc += e * e;
  }
  return std::sqrt(acc / double(err.size()));
}

inline double error_norm(double err, double x0, double x1, double atol, double rtol) {
  const double sc = atol + rtol * std::max(std::abs(x0), std::abs(x1));
  return std::abs(err / sc);
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration from t0 to t1 (either direction).
/// `observer(t, x)`, when given, is called after every accepted step
/// (including the initial point). Returns the state at t1.
template <class F, class V, class Obs>
V integrate_adaptive(F&& f, double t0, double t1, V x, const AdaptiveOptions& opt,
                     Obs&& observer) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  const double span = t1 - t0;
  if (span == 0.0) {
    observer(t0, x);
    return x;
  }
  const double dir = (span > 0.0) ? 1.0 : -1.0;
  const double h_max = (opt.h_max > 0.0) ? opt.h_max : std::abs(span);
  const double h_min = (opt.h_min > 0.0) ? opt.h_min : 1e-14 * std::abs(span);
  double h = (opt.h_init > 0.0) ? opt.h_init : std::min(h_max, std::abs(span) / 100.0);

  double t = t0;
  observer(t, x);
  std::int64_t steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > opt.max_steps) throw NumericError("integrate_adaptive: step budget exhausted");
    h = std::min(h, std::abs(t1 - t));
    if (h < h_min) throw NumericError("integrate_adaptive: step size underflow");
    const double hs = dir * h;

    const V k1 = f(t, x);
    const V k2 = f(t + c2 * hs, V(x + hs * (a21 * k1)));
    const V k3 = f(t + c3 * hs, V(x + hs * (a31 * k1 + a32 * k2)));
    const V k4 = f(t + c4 * hs, V(x + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
    const V k5 = f(t + c5 * hs, V(x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const V k6 = f(t + hs, V(x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const V x_new = x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const V k7 = f(t + hs, x_new);
    const V err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double en = detail::error_norm(err, x, x_new, opt.atol, opt.rtol);
    if (!std::isfinite(en)) throw NonfiniteState("integrate_adaptive: non-finite state");
    if (en <= 1.0) {
      t += hs;
      x = x_new;
      observer(t, x);
    }
    const double fac = (en > 0.0) ? 0.9 * std::pow(en, -0.2) : 5.0;
    h = std::min(h_max, h * std::min(5.0, std::max(0.2, fac)));
  }
  return x;
}

template <class F, class V>
V integrate_adaptive(F&& f, double t0, double t1, V x, const AdaptiveOptions& opt = {}) {
  return integrate_adaptive(std::forward<F>(f), t0, t1, std::move(x), opt,
                            [](double, const V&) {});
}

}  // namespace orbistab
