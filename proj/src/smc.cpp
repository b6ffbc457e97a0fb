#include "orbistab/smc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "orbistab/errors.hpp"
#include "orbistab/quadrature.hpp"
#include "orbistab/rootfind.hpp"

namespace orbistab {

namespace {

double drift_term(const TransverseLinearization& lin, const StableSubspace& sub, double t) {
  const Vec3 n = sub.n_at(t);
  return n.dot(lin.A_at(t) * n);
}

double authority_term(const StableSubspace& sub, double eps_sigma, double t) {
  const double b = sub.b_at(t);
  return b * sigmoid(b, eps_sigma);
}

constexpr int kDriftGridPerPeriod = 4096;

}  // namespace

double k2_lower_bound(const TransverseLinearization& lin, const StableSubspace& sub,
                      double eps_sigma, double quad_tol) {
  if (!(eps_sigma > 0.0)) throw ConfigError("eps_sigma must be positive");
  const double a = sub.tau0, b = sub.tau0 + kTauPeriod;
  const double denom =
      integrate([&](double t) { return authority_term(sub, eps_sigma, t); }, a, b, quad_tol);
  if (denom < 1e-12)
    throw DegenerateDenominator("input gain has no authority over the period (b*sigma "
                                "integral " + std::to_string(denom) + ")");
  const double numer = integrate([&](double t) { return drift_term(lin, sub, t); }, a, b, quad_tol);
  return numer / denom;
}

double sliding_control(const StableSubspace& sub, const SmcGains& gains, double tau,
                       const Vec3& xi, double eps_s) {
  const double s = sliding_variable(sub, tau, xi);
  const double sg = (eps_s > 0.0) ? s / (std::abs(s) + eps_s)
                                  : ((s > 0.0) ? 1.0 : (s < 0.0 ? -1.0 : 0.0));
  return -sigmoid(sub.b_at(tau), gains.eps_sigma) * (gains.k1 * sg + gains.k2 * s);
}

GainReport make_gains(const TransverseLinearization& lin, const StableSubspace& sub,
                      const SmcGains& requested) {
  if (!(requested.k1 > 0.0) || !(requested.k2 > 0.0) || !(requested.eps_sigma > 0.0))
    throw ConfigError("sliding-mode gains and sigmoid width must be positive");
  GainReport rep;
  rep.gains = requested;
  rep.T_tau = kTauPeriod;
  const double a = sub.tau0, b = sub.tau0 + kTauPeriod;
  rep.d = integrate([&](double t) { return authority_term(sub, requested.eps_sigma, t); },
                    a, b, 1e-10);
  if (rep.d < 1e-12)
    throw DegenerateDenominator("input gain has no authority over the period (b*sigma "
                                "integral " + std::to_string(rep.d) + ")");
  rep.integral_a = integrate([&](double t) { return drift_term(lin, sub, t); }, a, b, 1e-10);
  rep.k2_lower_bound = rep.integral_a / rep.d;
  rep.margin = requested.k2 - rep.k2_lower_bound;
  if (!(rep.margin > 0.0))
    throw GainsInsufficient("k2 = " + std::to_string(requested.k2) +
                            " does not exceed the stability bound " +
                            std::to_string(rep.k2_lower_bound));
  rep.alpha = (requested.k2 * rep.d - rep.integral_a) / rep.T_tau;

  // Windowed infimum of the drift budget I(t0, t) = S(t) - S(t0) over all
  // windows of at most one period, from a cumulative grid over two periods
  // with a local polish of the minimizing endpoints.
  auto g = [&](double t) {
    return requested.k2 * authority_term(sub, requested.eps_sigma, t) - drift_term(lin, sub, t);
  };
  const int N = kDriftGridPerPeriod;
  const std::vector<double> S = cumulative_integral(g, a, a + 2.0 * kTauPeriod, 2 * N);
  const double h = kTauPeriod / N;
  double best = 0.0;
  int bi = 0, bj = 0;
  for (int i = 0; i < N; ++i) {
    for (int j = i; j <= i + N; ++j) {
      const double v = S[j] - S[i];
      if (v < best) best = v, bi = i, bj = j;
    }
  }
  auto polish = [&](int idx) -> double {
    const double t0 = a + std::max(0, idx - 1) * h;
    const double t1 = a + std::min(2 * N, idx + 1) * h;
    if (g(t0) * g(t1) < 0.0) {
      const double tr = brent(g, t0, t1, 1e-12);
      const double tg = a + idx * h;
      return S[idx] + integrate(g, tg, tr, 1e-12);
    }
    return S[idx];
  };
  if (best < 0.0) {
    const double refined = polish(bj) - polish(bi);
    best = std::min(best, refined);
  }
  rep.m = best;
  return rep;
}

double reaching_time_bound(double s0, const GainReport& rep) {
  const double per_period = rep.gains.k1 * std::exp(rep.m) * rep.d;
  if (!(per_period > 0.0))
    throw DegenerateDenominator("reaching budget per period is not positive");
  return rep.T_tau * (1.0 + std::ceil(std::abs(s0) / per_period));
}

double reaching_time_bound(double s0, const SmcGains& gains, const StableSubspace& sub,
                           const TransverseLinearization& lin) {
  return reaching_time_bound(s0, make_gains(lin, sub, gains));
}

}  // namespace orbistab
