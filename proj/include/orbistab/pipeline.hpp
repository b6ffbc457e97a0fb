#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "orbistab/dynamics.hpp"
#include "orbistab/floquet.hpp"
#include "orbistab/sim.hpp"
#include "orbistab/smc.hpp"
#include "orbistab/transverse.hpp"
#include "orbistab/vhc.hpp"

namespace orbistab {

/// Severity-gated logging to stderr controlled by ORBISTAB_LOG
/// (quiet | info | debug, default info).
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

struct SimSpec {
  enum class Kind { Ltv, Nonlinear } kind = Kind::Nonlinear;
  SimConfig config;             // horizon filled from horizon_periods when > 0
  double horizon_periods = 3.0;
  double dist_amplitude = 0.0;  // matched sinusoid d(t) = amplitude * sin(omega t)
  double dist_omega = 1.0;
  Vec3 xi0 = Vec3(0.1, 0.1, 0.1);  // LTV start / nonlinear chart offset
  double start_tau = std::nan("");  // nonlinear start phase (default: chart origin)
  double mc_radius = 0.1;           // Monte Carlo perturbation radius
};

struct PipelineConfig {
  std::string model_key;
  nlohmann::json model_params;  // per-model overrides, may be null
  VhcSpec vhc;
  double phi0 = 0.35;
  double dphi0 = 0.0;
  ReducedOptions reduced;
  PflGains pfl;
  ChartOptions chart;
  LinearizeOptions lin;
  SubspaceOptions floquet;
  double cond_cap = 1e12;  // monodromy eigenvector condition cap
  SmcGains smc;
  bool k2_auto = false;
  double k2_auto_margin = 2.0;
  SimSpec sim;
  std::filesystem::path out = "out";
  std::uint64_t seed = 1;
  bool plots = false;
  int monte_carlo = 0;
};

/// Catalog defaults for the builtin models (constraint coefficients and the
/// turning point were chosen so that the reduced motion closes inside the
/// solvable span of each model).
PipelineConfig default_config(const std::string& model_key);

/// Parses and validates a config document; unknown keys are rejected.
PipelineConfig parse_config(const nlohmann::json& doc);
PipelineConfig load_config_file(const std::filesystem::path& p);

/// Products of the staged pipeline, filled in dependency order.
struct Pipeline {
  MechanicalModel model;
  ConstraintCurve curve;
  ScalarTrajectory traj;
  PeriodicOrbit orbit;
  TransverseChart chart;
  TransverseLinearization lin;
  Monodromy mono;
  StableSubspace sub;
  SubspaceDiagnostics diag;
  GainReport gains;
};

Pipeline build_design(const PipelineConfig& cfg);
void extend_analysis(const PipelineConfig& cfg, Pipeline& p);
void extend_gains(const PipelineConfig& cfg, Pipeline& p);

int run_design(const PipelineConfig& cfg);
int run_analyze(const PipelineConfig& cfg);
int run_gains(const PipelineConfig& cfg);
int run_simulate(const PipelineConfig& cfg);
int run_report(const PipelineConfig& cfg);

}  // namespace orbistab
