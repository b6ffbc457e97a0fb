#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <vector>

namespace orbistab {

/// Adaptive Gauss-Kronrod integral of f over [a, b] to the given tolerance.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-10) {
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, 15, tol);
}

/// Cumulative integral of f on a uniform grid of n+1 nodes over [a, b]:
/// out[k] = integral from a to a + k*(b-a)/n, out[0] = 0. Each cell uses a
/// fixed 15-point Gauss rule, which is far beyond spline smoothness needs.
template <class F>
std::vector<double> cumulative_integral(F&& f, double a, double b, int n) {
  std::vector<double> out(std::size_t(n) + 1, 0.0);
  const double h = (b - a) / double(n);
  for (int k = 0; k < n; ++k) {
    const double xl = a + h * double(k);
    out[std::size_t(k) + 1] =
        out[std::size_t(k)] +
        boost::math::quadrature::gauss<double, 15>::integrate(f, xl, xl + h);
  }
  return out;
}

}  // namespace orbistab
