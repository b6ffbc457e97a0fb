#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "orbistab/dynamics.hpp"
#include "orbistab/floquet.hpp"
#include "orbistab/pfl.hpp"
#include "orbistab/smc.hpp"
#include "orbistab/transverse.hpp"
#include "orbistab/vhc.hpp"

namespace orbistab {

enum class Integrator { FixedRk4, Adaptive };

struct SimConfig {
  Integrator integrator = Integrator::FixedRk4;
  double step = 1e-3;       // fixed-step size: phase units for the LTV loop, seconds otherwise
  double tolerance = 1e-9;  // adaptive relative tolerance
  double horizon = 0.0;     // total integration span, same units as step
  double start = std::nan("");  // default: subspace phase origin / t = 0
  double eps_s = 0.0;  // boundary-layer width; 0 keeps the pure switching law
  std::function<double(double)> disturbance;  // matched torque disturbance d(t)
  std::uint64_t seed = 0;
  bool force_zero_input = false;  // open-loop probe (w = 0)
  double reaching_threshold = 1e-6;
  double state_cap = 1e6;
  PflGains pfl_gains{};  // used only for the V_y metric of LTV runs
  int output_stride = 1;
};

struct SimTrace {
  std::vector<double> t;  // phase for LTV runs, seconds for nonlinear runs
  std::vector<Vec4> x;    // nonlinear runs only
  std::vector<double> tau;
  std::vector<Vec3> xi;
  std::vector<double> s, b, w, u;
  std::vector<double> orbital_dist;  // nonlinear runs only
  std::vector<double> v_y;
  double reaching_time = std::nan("");  // first sample with |s| < threshold
  double contraction_per_period = std::nan("");  // worst pre-reaching s^2 period ratio
  int tube_exits = 0;
  std::uint64_t seed = 0;
};

/// Closed loop of the periodic linear system d(xi)/d(tau) = A xi + B w under
/// the switching feedback. Pure switching requires the fixed-step integrator;
/// the adaptive one demands eps_s > 0 (ConfigConflict otherwise).
SimTrace simulate_ltv(const TransverseLinearization& lin, const StableSubspace& sub,
                      const SmcGains& gains, const Vec3& xi0, const SimConfig& config);

/// Closed loop of the full mechanical system: the switching feedback is read
/// through the moving chart and realized as a physical torque, with an optional
/// matched disturbance added after the control law. Leaving the chart tube is
/// tolerated up to a grace window of 0.1 period per episode, then TubeExit.
SimTrace simulate_nonlinear(const MechanicalModel& model, const ConstraintCurve& curve,
                            const PflGains& pfl, const TransverseChart& chart,
                            const StableSubspace& sub, const SmcGains& smc,
                            const Vec4& x0, const SimConfig& config);

/// Weighted Euclidean distance from a state to the closed orbit: dense scan of
/// the stored samples plus a local golden-section refinement.
double orbital_distance(const PeriodicOrbit& orbit, const Vec4& x,
                        const Vec4& weights = Vec4::Ones());

}  // namespace orbistab
