#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "orbistab/errors.hpp"

namespace orbistab {

namespace detail {

/// Solves a tridiagonal system in place (Thomas algorithm).
/// a = sub-diagonal (a[0] unused), b = diagonal, c = super-diagonal
/// (c[n-1] unused), d = right-hand side; the solution is written to d.
inline void solve_tridiagonal(std::vector<double>& a, std::vector<double>& b,
                              std::vector<double>& c, std::vector<double>& d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
  }
}

}  // namespace detail

/// Natural cubic spline on an ascending knot grid.
class CubicSpline {
public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw NumericError("spline: need >= 3 knots");
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!(x_[i + 1] > x_[i])) throw NumericError("spline: knots not ascending");
    }
    m_.assign(n, 0.0);
    std::vector<double> a(n - 2), b(n - 2), c(n - 2), d(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double hl = x_[i] - x_[i - 1];
      const double hr = x_[i + 1] - x_[i];
      a[i - 1] = hl / 6.0;
      b[i - 1] = (hl + hr) / 3.0;
      c[i - 1] = hr / 6.0;
      d[i - 1] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
    }
    detail::solve_tridiagonal(a, b, c, d);
    for (std::size_t i = 1; i + 1 < n; ++i) m_[i] = d[i - 1];
    uniform_ = inferred_uniform();
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

  double eval(double x) const {
    const auto [i, h, A, B] = locate(x);
    return A * y_[i] + B * y_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
  }

  double deriv(double x) const {
    const auto [i, h, A, B] = locate(x);
    return (y_[i + 1] - y_[i]) / h -
           (3.0 * A * A - 1.0) / 6.0 * h * m_[i] +
           (3.0 * B * B - 1.0) / 6.0 * h * m_[i + 1];
  }

  double second_deriv(double x) const {
    const auto [i, h, A, B] = locate(x);
    return A * m_[i] + B * m_[i + 1];
  }

private:
  struct Cell {
    std::size_t i;
    double h, A, B;
  };

  bool inferred_uniform() const {
    const double h0 = x_[1] - x_[0];
    for (std::size_t i = 1; i + 1 < x_.size(); ++i) {
      if (std::abs((x_[i + 1] - x_[i]) - h0) > 1e-12 * std::abs(h0)) return false;
    }
    return true;
  }

  Cell locate(double x) const {
    const std::size_t n = x_.size();
    if (x < x_.front() || x > x_.back())
      throw DomainExceeded("spline: query outside knot span");
    std::size_t i;
    if (uniform_) {
      const double h0 = (x_.back() - x_.front()) / double(n - 1);
      i = std::min<std::size_t>(n - 2, std::size_t(std::max(0.0, (x - x_.front()) / h0)));
    } else {
      i = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
      i = (i == 0) ? 0 : std::min(i - 1, n - 2);
    }
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - x) / h;
    const double B = (x - x_[i]) / h;
    return {i, h, A, B};
  }

  std::vector<double> x_, y_, m_;
  bool uniform_ = true;
};

/// Periodic cubic spline: knots x[0..n-1] plus period L; the sample at
/// x[0] + L is implied equal to the sample at x[0]. Second derivatives are
/// found from the cyclic tridiagonal system via Sherman-Morrison.
class PeriodicCubicSpline {
public:
  PeriodicCubicSpline() = default;

  PeriodicCubicSpline(std::vector<double> x, std::vector<double> y, double period)
      : x_(std::move(x)), y_(std::move(y)), period_(period) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw NumericError("periodic spline: need >= 3 knots");
    if (!(period_ > 0.0)) throw NumericError("periodic spline: period must be positive");
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!(x_[i + 1] > x_[i])) throw NumericError("periodic spline: knots not ascending");
    }
    if (!(x_.back() - x_.front() < period_))
      throw NumericError("periodic spline: knot span exceeds period");

    h_.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) h_[i] = x_[i + 1] - x_[i];
    h_[n - 1] = x_.front() + period_ - x_.back();

    // Cyclic rows: (h[i-1]/6) m[i-1] + ((h[i-1]+h[i])/3) m[i] + (h[i]/6) m[i+1] = d[i]
    std::vector<double> lo(n), di(n), up(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t im = (i + n - 1) % n;
      const std::size_t ip = (i + 1) % n;
      lo[i] = h_[im] / 6.0;
      di[i] = (h_[im] + h_[i]) / 3.0;
      up[i] = h_[i] / 6.0;
      rhs[i] = (y_[ip] - y_[i]) / h_[i] - (y_[i] - y_[im]) / h_[im];
    }
    m_ = solve_cyclic(lo, di, up, rhs);
    uniform_ = inferred_uniform();
  }

  double period() const { return period_; }
  double x0() const { return x_.front(); }

  double eval(double x) const {
    const auto [i, ip, h, A, B] = locate(x);
    return A * y_[i] + B * y_[ip] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[ip]) * h * h / 6.0;
  }

  double deriv(double x) const {
    const auto [i, ip, h, A, B] = locate(x);
    return (y_[ip] - y_[i]) / h -
           (3.0 * A * A - 1.0) / 6.0 * h * m_[i] +
           (3.0 * B * B - 1.0) / 6.0 * h * m_[ip];
  }

  double second_deriv(double x) const {
    const auto [i, ip, h, A, B] = locate(x);
    return A * m_[i] + B * m_[ip];
  }

private:
  struct Cell {
    std::size_t i, ip;
    double h, A, B;
  };

  bool inferred_uniform() const {
    const double h0 = h_[0];
    for (double h : h_) {
      if (std::abs(h - h0) > 1e-12 * std::abs(h0)) return false;
    }
    return true;
  }

  static std::vector<double> solve_cyclic(std::vector<double> lo, std::vector<double> di,
                                          std::vector<double> up, std::vector<double> rhs) {
    const std::size_t n = di.size();
    // Sherman-Morrison with u = (gamma, 0, ..., 0, up[n-1])^T,
    // v = (1, 0, ..., 0, lo[0]/gamma)^T removing the corner entries.
    const double gamma = -di[0];
    std::vector<double> b(di);
    b[0] = di[0] - gamma;
    b[n - 1] = di[n - 1] - lo[0] * up[n - 1] / gamma;
    std::vector<double> a1(lo), c1(up), d1(rhs);
    auto bb = b;
    detail::solve_tridiagonal(a1, bb, c1, d1);  // y = T^{-1} rhs
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = up[n - 1];
    a1 = lo;
    c1 = up;
    bb = b;
    detail::solve_tridiagonal(a1, bb, c1, u);  // z = T^{-1} u
    const double vy = d1[0] + lo[0] / gamma * d1[n - 1];
    const double vz = u[0] + lo[0] / gamma * u[n - 1];
    const double factor = vy / (1.0 + vz);
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = d1[i] - factor * u[i];
    return m;
  }

  Cell locate(double x) const {
    const std::size_t n = x_.size();
    double r = std::fmod(x - x_.front(), period_);
    if (r < 0.0) r += period_;
    const double xw = x_.front() + r;
    std::size_t i;
    if (uniform_) {
      i = std::min<std::size_t>(n - 1, std::size_t(r / h_[0]));
    } else {
      auto it = std::upper_bound(x_.begin(), x_.end(), xw);
      i = (it == x_.begin()) ? 0 : std::size_t(it - x_.begin() - 1);
      if (i > n - 1) i = n - 1;
    }
    const std::size_t ip = (i + 1) % n;
    const double h = h_[i];
    const double B = (xw - x_[i]) / h;
    const double A = 1.0 - B;
    return {i, ip, h, A, B};
  }

  std::vector<double> x_, y_, h_, m_;
  double period_ = 0.0;
  bool uniform_ = true;
};

/// Cubic Hermite interpolation of f over [xa, xb] given endpoint values and
/// derivatives. Used for local inversion between dense samples.
inline double hermite_eval(double xa, double xb, double fa, double fb, double da,
                           double db, double x) {
  const double h = xb - xa;
  const double s = (x - xa) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * fa + h10 * h * da + h01 * fb + h11 * h * db;
}

inline double hermite_deriv(double xa, double xb, double fa, double fb, double da,
                            double db, double x) {
  const double h = xb - xa;
  const double s = (x - xa) / h;
  const double s2 = s * s;
  const double d00 = (6.0 * s2 - 6.0 * s) / h;
  const double d10 = 3.0 * s2 - 4.0 * s + 1.0;
  const double d01 = (-6.0 * s2 + 6.0 * s) / h;
  const double d11 = 3.0 * s2 - 2.0 * s;
  return d00 * fa + d10 * da + d01 * fb + d11 * db;
}

}  // namespace orbistab
