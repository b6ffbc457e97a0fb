#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "orbistab/interp.hpp"
#include "orbistab/transverse.hpp"
#include "orbistab/types.hpp"

namespace orbistab {

struct FloquetOptions {
  double integ_tol = 1e-12;
  double cond_cap = 1e12;  // eigenvector condition beyond which Psi counts as defective
};

/// State-transition matrix over one phase period and its spectrum.
struct Monodromy {
  Mat3 Psi;
  std::array<std::complex<double>, 3> multipliers;  // sorted by modulus, ascending
  double det = 0.0;
  double eigvec_cond = 0.0;
};

Monodromy monodromy(const TransverseLinearization& lin, const FloquetOptions& opt = {});

struct SubspaceOptions {
  double tol = 1e-9;         // period-map convergence threshold on the direction
  int max_periods = 50;
  int restarts = 5;
  std::uint64_t seed = 0x2545f4914f6cdd1dull;
  double gap_floor = 1.05;   // required |mu_3| / max(|mu_1|, |mu_2|)
  double zero_margin = 1e-3; // simple-zero slope floor, relative to max|b|
  double integ_tol = 1e-12;
  // Record n(tau) on a grid this many times denser than the linearization
  // knots.  The normal can rotate much faster than A(tau) varies (it picks up
  // the full adjoint dynamics), so resolving its spline can need a finer grid
  // than the one A itself was sampled on.
  int grid_refine = 1;
};

/// Unit normal n(tau) of the invariant stable plane of the periodic system,
/// together with the scalar input gain b(tau) = n(tau)^T B(tau), sampled on a
/// uniform phase grid (the linearization grid, refined by grid_refine).
struct StableSubspace {
  std::vector<double> tau;
  std::vector<Vec3> n;
  std::vector<double> b;
  double tau0 = 0.0;
  std::vector<double> zeros;  // phases with b = 0, within [tau0, tau0 + 2*pi)
  double b_max_abs = 0.0;
  int periods_used = 0;
  double period_mismatch = 0.0;

  Vec3 n_at(double t) const {
    return Vec3(sN_[0].eval(t), sN_[1].eval(t), sN_[2].eval(t));
  }
  Vec3 dn_at(double t) const {
    return Vec3(sN_[0].deriv(t), sN_[1].deriv(t), sN_[2].deriv(t));
  }
  double b_at(double t) const { return sB_.eval(t); }
  double db_at(double t) const { return sB_.deriv(t); }
  bool near_b_zero(double t, double frac = 0.05) const {
    return std::abs(b_at(t)) < frac * b_max_abs;
  }

  static StableSubspace from_samples(double tau0, std::vector<Vec3> n,
                                     std::vector<double> b, double zero_margin = 1e-3);

  friend StableSubspace stable_normal(const TransverseLinearization& lin,
                                      const SubspaceOptions& opt);

private:
  std::array<PeriodicCubicSpline, 3> sN_;
  PeriodicCubicSpline sB_;
  void build_splines(double zero_margin);
};

/// Extracts n(tau) by power iteration of the adjoint period map (backward
/// projective integration with renormalization). Throws NoDominance when the
/// multiplier gap is below gap_floor, NoConvergence when the iteration fails,
/// NonSimpleZero when a detected zero of b has a vanishing slope.
StableSubspace stable_normal(const TransverseLinearization& lin,
                             const SubspaceOptions& opt = {});

struct SubspaceDiagnostics {
  double alignment = 0.0;          // |<n(tau0), left eigenvector of Psi>|
  double max_norm_error = 0.0;     // worst deviation of ||n|| from 1 at the knots
  double period_mismatch = 0.0;
  double max_ode_residual = 0.0;   // sup of |dn/dtau + (I - n n^T) A^T n|
  double max_invariance_residual = 0.0;  // sup of |n^T e| for propagated stable basis e
};

SubspaceDiagnostics verify_subspace(const TransverseLinearization& lin,
                                    const StableSubspace& sub,
                                    const FloquetOptions& opt = {});

}  // namespace orbistab
