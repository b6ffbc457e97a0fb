#pragma once

#include "orbistab/floquet.hpp"
#include "orbistab/types.hpp"

namespace orbistab {

struct SmcGains {
  double k1 = 8.0;
  double k2 = 0.5;
  double eps_sigma = 1e-4;
};

/// Odd saturation sigma(b) = b / (|b| + eps); |sigma| < 1, sigma(0) = 0.
inline double sigmoid(double b, double eps_sigma) {
  return b / (std::abs(b) + eps_sigma);
}

/// Sliding variable s = n(tau)^T xi.
inline double sliding_variable(const StableSubspace& sub, double tau, const Vec3& xi) {
  return sub.n_at(tau).dot(xi);
}

/// Lower admissible k2: ratio of the period integrals of n^T A n and
/// b * sigma(b). Throws DegenerateDenominator when the input gain has no
/// authority over the period.
double k2_lower_bound(const TransverseLinearization& lin, const StableSubspace& sub,
                      double eps_sigma, double quad_tol = 1e-10);

/// Switching feedback w = -sigma(b) (k1 * sgn(s) + k2 * s) with sgn(0) = 0.
/// eps_s > 0 replaces sgn(s) by the boundary-layer surrogate s / (|s| + eps_s).
double sliding_control(const StableSubspace& sub, const SmcGains& gains, double tau,
                       const Vec3& xi, double eps_s = 0.0);

/// Validated gain set with the quadratures behind the stability condition.
struct GainReport {
  SmcGains gains;
  double k2_lower_bound = 0.0;
  double margin = 0.0;      // k2 - k2_lower_bound
  double m = 0.0;           // infimum of the windowed drift integral (<= 0)
  double d = 0.0;           // period integral of b * sigma(b)
  double T_tau = kTauPeriod;
  double integral_a = 0.0;  // period integral of n^T A n
  double alpha = 0.0;       // per-phase contraction rate (k2*d - integral_a)/T_tau
};

/// Validates the requested gains against the bound and precomputes the
/// reaching/contraction quadratures. Throws ConfigError for non-positive
/// entries and GainsInsufficient when k2 does not exceed the bound.
GainReport make_gains(const TransverseLinearization& lin, const StableSubspace& sub,
                      const SmcGains& requested);

/// Upper bound on the phase elapsed before s first hits zero:
/// T_tau * (1 + ceil(|s0| / (k1 * exp(m) * d))).
double reaching_time_bound(double s0, const GainReport& report);
double reaching_time_bound(double s0, const SmcGains& gains, const StableSubspace& sub,
                           const TransverseLinearization& lin);

}  // namespace orbistab
