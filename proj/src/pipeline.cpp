#include "orbistab/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "orbistab/errors.hpp"
#include "orbistab/io.hpp"

namespace orbistab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int log_level() {
  static const int lvl = [] {
    const char* e = std::getenv("ORBISTAB_LOG");
    if (!e) return 1;
    const std::string s(e);
    if (s == "quiet") return 0;
    if (s == "debug") return 2;
    return 1;
  }();
  return lvl;
}

}  // namespace

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[orbistab] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[orbistab] " << msg << "\n";
}

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || (it.key() == k);
    if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

double get_num(const json& j, const char* key, double fb, const std::string& where) {
  if (!j.contains(key)) return fb;
  if (!j[key].is_number())
    throw ConfigError(where + "." + key + " must be a number");
  return j[key].get<double>();
}

double get_pos(const json& j, const char* key, double fb, const std::string& where) {
  const double v = get_num(j, key, fb, where);
  if (!(v > 0.0)) throw ConfigError(where + "." + key + " must be positive");
  return v;
}

int get_int(const json& j, const char* key, int fb, const std::string& where, int min_v) {
  if (!j.contains(key)) return fb;
  if (!j[key].is_number_integer())
    throw ConfigError(where + "." + key + " must be an integer");
  const int v = j[key].get<int>();
  if (v < min_v)
    throw ConfigError(where + "." + key + " must be at least " + std::to_string(min_v));
  return v;
}

std::string get_str(const json& j, const char* key, const std::string& fb,
                    const std::string& where) {
  if (!j.contains(key)) return fb;
  if (!j[key].is_string()) throw ConfigError(where + "." + key + " must be a string");
  return j[key].get<std::string>();
}

}  // namespace

PipelineConfig default_config(const std::string& model_key) {
  PipelineConfig cfg;
  cfg.model_key = model_key;
  if (model_key == "pendubot") {
    cfg.vhc.c = {0.008, -0.013, 0.2};
    cfg.phi0 = 0.35;
    cfg.floquet.grid_refine = 4;
  } else if (model_key == "butterfly") {
    cfg.vhc.c = {-0.008, 0.013, 0.010};
    cfg.phi0 = 1.1;
    // The butterfly normal rotates through ~40 rad/rad near the speed peaks;
    // resolving its spline needs a much denser grid than A(tau) itself.
    cfg.floquet.grid_refine = 128;
  } else {
    throw UnknownModel("unknown model key \"" + model_key +
                       "\" (available: pendubot, butterfly)");
  }
  return cfg;
}

PipelineConfig parse_config(const json& doc) {
  check_keys(doc, "config",
             {"schema_version", "model", "params", "vhc", "orbit", "pfl", "chart",
              "linearize", "floquet", "smc", "sim", "out", "seed", "plots"});
  if (!doc.contains("model") || !doc["model"].is_string())
    throw ConfigError("config.model (string) is required");
  PipelineConfig cfg = default_config(doc["model"].get<std::string>());
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw ConfigError("config.params must be an object");
    cfg.model_params = doc["params"];
  }

  if (doc.contains("vhc")) {
    const json& j = doc["vhc"];
    check_keys(j, "vhc",
               {"c", "phi_min", "phi_max", "n_grid", "theta_guess", "residual_tol",
                "fd_step", "fd_step2", "non_smooth_cap"});
    if (j.contains("c")) {
      if (!j["c"].is_array() || j["c"].size() != 3)
        throw ConfigError("vhc.c must be an array of 3 numbers");
      for (int i = 0; i < 3; ++i) cfg.vhc.c[i] = j["c"][i].get<double>();
    }
    cfg.vhc.phi_min = get_num(j, "phi_min", cfg.vhc.phi_min, "vhc");
    cfg.vhc.phi_max = get_num(j, "phi_max", cfg.vhc.phi_max, "vhc");
    if (!(cfg.vhc.phi_max > cfg.vhc.phi_min))
      throw ConfigError("vhc.phi_max must exceed vhc.phi_min");
    cfg.vhc.n_grid = get_int(j, "n_grid", cfg.vhc.n_grid, "vhc", 11);
    cfg.vhc.theta_guess = get_num(j, "theta_guess", cfg.vhc.theta_guess, "vhc");
    cfg.vhc.residual_tol = get_pos(j, "residual_tol", cfg.vhc.residual_tol, "vhc");
    cfg.vhc.fd_step = get_pos(j, "fd_step", cfg.vhc.fd_step, "vhc");
    cfg.vhc.fd_step2 = get_pos(j, "fd_step2", cfg.vhc.fd_step2, "vhc");
    cfg.vhc.non_smooth_cap = get_pos(j, "non_smooth_cap", cfg.vhc.non_smooth_cap, "vhc");
  }

  if (doc.contains("orbit")) {
    const json& j = doc["orbit"];
    check_keys(j, "orbit",
               {"phi0", "dphi0", "rtol", "atol", "closure_tol", "alpha_floor",
                "max_horizon", "n_store"});
    cfg.phi0 = get_num(j, "phi0", cfg.phi0, "orbit");
    cfg.dphi0 = get_num(j, "dphi0", cfg.dphi0, "orbit");
    cfg.reduced.rtol = get_pos(j, "rtol", cfg.reduced.rtol, "orbit");
    cfg.reduced.atol = get_pos(j, "atol", cfg.reduced.atol, "orbit");
    cfg.reduced.closure_tol = get_pos(j, "closure_tol", cfg.reduced.closure_tol, "orbit");
    cfg.reduced.alpha_floor = get_pos(j, "alpha_floor", cfg.reduced.alpha_floor, "orbit");
    cfg.reduced.max_horizon = get_pos(j, "max_horizon", cfg.reduced.max_horizon, "orbit");
    cfg.reduced.n_store = get_int(j, "n_store", cfg.reduced.n_store, "orbit", 64);
  }

  if (doc.contains("pfl")) {
    const json& j = doc["pfl"];
    check_keys(j, "pfl", {"nu1", "nu2"});
    cfg.pfl.nu1 = get_pos(j, "nu1", cfg.pfl.nu1, "pfl");
    cfg.pfl.nu2 = get_pos(j, "nu2", cfg.pfl.nu2, "pfl");
  }

  if (doc.contains("chart")) {
    const json& j = doc["chart"];
    check_keys(j, "chart", {"n_chart", "rho_floor", "tube_fraction"});
    cfg.chart.n_chart = get_int(j, "n_chart", cfg.chart.n_chart, "chart", 16);
    cfg.chart.rho_floor = get_pos(j, "rho_floor", cfg.chart.rho_floor, "chart");
    cfg.chart.tube_fraction = get_pos(j, "tube_fraction", cfg.chart.tube_fraction, "chart");
  }

  if (doc.contains("linearize")) {
    const json& j = doc["linearize"];
    check_keys(j, "linearize", {"n_grid", "delta", "delta_w", "delta_min", "richardson_tol"});
    cfg.lin.n_grid = get_int(j, "n_grid", cfg.lin.n_grid, "linearize", 16);
    cfg.lin.delta = get_pos(j, "delta", cfg.lin.delta, "linearize");
    cfg.lin.delta_w = get_pos(j, "delta_w", cfg.lin.delta_w, "linearize");
    cfg.lin.delta_min = get_pos(j, "delta_min", cfg.lin.delta_min, "linearize");
    cfg.lin.richardson_tol = get_pos(j, "richardson_tol", cfg.lin.richardson_tol, "linearize");
  }

  if (doc.contains("floquet")) {
    const json& j = doc["floquet"];
    check_keys(j, "floquet",
               {"tol", "max_periods", "restarts", "seed", "gap_floor", "zero_margin",
                "integ_tol", "grid_refine", "cond_cap"});
    cfg.floquet.tol = get_pos(j, "tol", cfg.floquet.tol, "floquet");
    cfg.floquet.max_periods = get_int(j, "max_periods", cfg.floquet.max_periods, "floquet", 1);
    cfg.floquet.restarts = get_int(j, "restarts", cfg.floquet.restarts, "floquet", 1);
    if (j.contains("seed")) cfg.floquet.seed = j["seed"].get<std::uint64_t>();
    cfg.floquet.gap_floor = get_pos(j, "gap_floor", cfg.floquet.gap_floor, "floquet");
    cfg.floquet.zero_margin = get_pos(j, "zero_margin", cfg.floquet.zero_margin, "floquet");
    cfg.floquet.integ_tol = get_pos(j, "integ_tol", cfg.floquet.integ_tol, "floquet");
    cfg.floquet.grid_refine = get_int(j, "grid_refine", cfg.floquet.grid_refine, "floquet", 1);
    cfg.cond_cap = get_pos(j, "cond_cap", cfg.cond_cap, "floquet");
  }

  if (doc.contains("smc")) {
    const json& j = doc["smc"];
    check_keys(j, "smc", {"k1", "k2", "auto_margin", "eps_sigma"});
    cfg.smc.k1 = get_pos(j, "k1", cfg.smc.k1, "smc");
    if (j.contains("k2")) {
      if (j["k2"].is_string()) {
        if (j["k2"].get<std::string>() != "auto")
          throw ConfigError("smc.k2 must be a positive number or \"auto\"");
        cfg.k2_auto = true;
      } else {
        cfg.smc.k2 = get_pos(j, "k2", cfg.smc.k2, "smc");
      }
    }
    cfg.k2_auto_margin = get_pos(j, "auto_margin", cfg.k2_auto_margin, "smc");
    cfg.smc.eps_sigma = get_pos(j, "eps_sigma", cfg.smc.eps_sigma, "smc");
  }

  if (doc.contains("sim")) {
    const json& j = doc["sim"];
    check_keys(j, "sim",
               {"kind", "integrator", "step", "tolerance", "horizon_periods", "eps_s",
                "disturbance", "xi0", "start_tau", "mc_radius", "output_stride",
                "reaching_threshold", "state_cap"});
    const std::string kind = get_str(j, "kind", "nonlinear", "sim");
    if (kind == "ltv")
      cfg.sim.kind = SimSpec::Kind::Ltv;
    else if (kind == "nonlinear")
      cfg.sim.kind = SimSpec::Kind::Nonlinear;
    else
      throw ConfigError("sim.kind must be \"ltv\" or \"nonlinear\"");
    const std::string integ = get_str(j, "integrator", "fixed", "sim");
    if (integ == "fixed")
      cfg.sim.config.integrator = Integrator::FixedRk4;
    else if (integ == "adaptive")
      cfg.sim.config.integrator = Integrator::Adaptive;
    else
      throw ConfigError("sim.integrator must be \"fixed\" or \"adaptive\"");
    cfg.sim.config.step = get_pos(j, "step", cfg.sim.config.step, "sim");
    cfg.sim.config.tolerance = get_pos(j, "tolerance", cfg.sim.config.tolerance, "sim");
    cfg.sim.horizon_periods = get_pos(j, "horizon_periods", cfg.sim.horizon_periods, "sim");
    const double eps_s = get_num(j, "eps_s", cfg.sim.config.eps_s, "sim");
    if (eps_s < 0.0) throw ConfigError("sim.eps_s must be nonnegative");
    cfg.sim.config.eps_s = eps_s;
    if (j.contains("disturbance")) {
      const json& d = j["disturbance"];
      check_keys(d, "sim.disturbance", {"amplitude", "omega"});
      cfg.sim.dist_amplitude = get_num(d, "amplitude", 0.0, "sim.disturbance");
      cfg.sim.dist_omega = get_pos(d, "omega", cfg.sim.dist_omega, "sim.disturbance");
    }
    if (j.contains("xi0")) {
      if (!j["xi0"].is_array() || j["xi0"].size() != 3)
        throw ConfigError("sim.xi0 must be an array of 3 numbers");
      for (int i = 0; i < 3; ++i) cfg.sim.xi0[i] = j["xi0"][i].get<double>();
    }
    if (j.contains("start_tau")) cfg.sim.start_tau = j["start_tau"].get<double>();
    cfg.sim.mc_radius = get_pos(j, "mc_radius", cfg.sim.mc_radius, "sim");
    cfg.sim.config.output_stride =
        get_int(j, "output_stride", cfg.sim.config.output_stride, "sim", 1);
    cfg.sim.config.reaching_threshold =
        get_pos(j, "reaching_threshold", cfg.sim.config.reaching_threshold, "sim");
    cfg.sim.config.state_cap = get_pos(j, "state_cap", cfg.sim.config.state_cap, "sim");
  }

  if (doc.contains("out")) cfg.out = doc["out"].get<std::string>();
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("plots")) cfg.plots = doc["plots"].get<bool>();
  return cfg;
}

PipelineConfig load_config_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config file: " + p.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config parse failure in " + p.string() + ": " + e.what());
  }
  return parse_config(doc);
}

Pipeline build_design(const PipelineConfig& cfg) {
  Pipeline p;
  p.model = model_from_config(cfg.model_key, cfg.model_params);
  log_debug("model \"" + p.model.name + "\" ready");
  p.curve = solve_theta(p.model, cfg.vhc);
  log_debug("constraint curve solved on " + std::to_string(cfg.vhc.n_grid) + " nodes");
  p.traj = integrate_reduced(p.model, p.curve, cfg.phi0, cfg.dphi0, cfg.reduced);
  p.orbit = lift_trajectory(p.curve, p.traj);
  log_info("orbit closed: T = " + io::fmt(p.orbit.T) + " s");
  return p;
}

void extend_analysis(const PipelineConfig& cfg, Pipeline& p) {
  p.chart = chart_from_orbit(p.curve, p.orbit, cfg.chart);
  log_debug("chart built, tau0 = " + io::fmt(p.chart.tau0()));
  p.lin = linearize(p.model, p.curve, cfg.pfl, p.chart, cfg.lin);
  log_debug("linearization done, worst FD error " + io::fmt(p.lin.max_fd_error));
  const FloquetOptions fo{cfg.floquet.integ_tol, cfg.cond_cap};
  p.mono = monodromy(p.lin, fo);
  {
    std::ostringstream os;
    os << "multipliers:";
    for (const auto& mu : p.mono.multipliers) os << " |mu| = " << std::abs(mu);
    log_info(os.str());
  }
  p.sub = stable_normal(p.lin, cfg.floquet);
  p.diag = verify_subspace(p.lin, p.sub, fo);
  log_info("normal settled in " + std::to_string(p.sub.periods_used) +
           " period(s), alignment " + io::fmt(p.diag.alignment));
}

void extend_gains(const PipelineConfig& cfg, Pipeline& p) {
  SmcGains req = cfg.smc;
  if (cfg.k2_auto) {
    const double bound = k2_lower_bound(p.lin, p.sub, req.eps_sigma);
    req.k2 = (bound > 0.0) ? cfg.k2_auto_margin * bound : 0.5;
    log_info("auto k2 = " + io::fmt(req.k2) + " (bound " + io::fmt(bound) + ")");
  }
  p.gains = make_gains(p.lin, p.sub, req);
}

namespace {

void write_design_artifacts(const PipelineConfig& cfg, const Pipeline& p) {
  fs::create_directories(cfg.out);
  io::write_orbit_csv(cfg.out / "orbit.csv", p.orbit);
  io::write_json(cfg.out / "orbit_meta.json", io::orbit_meta(p.orbit, cfg.vhc, cfg.reduced));
  if (cfg.plots) {
    io::write_svg(cfg.out / "plot_orbit.svg", "reduced phase portrait", "phi", "dphi",
                  {{"orbit", p.orbit.phi, p.orbit.dphi}});
    io::write_svg(cfg.out / "plot_constraint.svg", "constraint curve", "phi", "theta",
                  {{"Theta(phi)", p.curve.grid_phi(), p.curve.grid_theta()}});
  }
}

void write_analysis_artifacts(const PipelineConfig& cfg, const Pipeline& p) {
  io::write_linearization_csv(cfg.out / "linearization.csv", p.lin);
  io::write_json(cfg.out / "linearization_meta.json", io::linearization_meta(p.lin));
  io::write_subspace_csv(cfg.out / "subspace.csv", p.sub);
  io::write_json(cfg.out / "subspace_meta.json", io::subspace_meta(p.sub, p.mono));

  const double bound = k2_lower_bound(p.lin, p.sub, cfg.smc.eps_sigma);
  std::ostringstream os;
  os << "analysis report\n"
     << "===============\n"
     << "model: " << p.model.name << "\n"
     << "orbit period T = " << io::fmt(p.orbit.T) << " s, phase period = "
     << io::fmt(kTauPeriod) << ", tau0 = " << io::fmt(p.chart.tau0()) << "\n\n"
     << "multipliers of the period map:\n";
  for (const auto& mu : p.mono.multipliers) {
    os << "  " << io::fmt(mu.real()) << (mu.imag() < 0 ? " - " : " + ")
       << io::fmt(std::abs(mu.imag())) << "i   (|mu| = " << io::fmt(std::abs(mu)) << ")\n";
  }
  os << "det(Psi) = " << io::fmt(p.mono.det)
     << ", eigenvector condition = " << io::fmt(p.mono.eigvec_cond) << "\n\n"
     << "normal direction: settled in " << p.sub.periods_used
     << " period(s), mismatch " << io::fmt(p.sub.period_mismatch) << "\n"
     << "  alignment with left eigenvector: " << io::fmt(p.diag.alignment) << "\n"
     << "  ODE residual: " << io::fmt(p.diag.max_ode_residual)
     << ", invariance residual: " << io::fmt(p.diag.max_invariance_residual) << "\n\n"
     << "input gain b: max |b| = " << io::fmt(p.sub.b_max_abs) << "\n"
     << "  zeros at tau =";
  if (p.sub.zeros.empty()) os << " (none)";
  for (double z : p.sub.zeros) os << " " << io::fmt(z);
  os << "\n\nk2 lower bound (eps_sigma = " << io::fmt(cfg.smc.eps_sigma)
     << "): " << io::fmt(bound) << "\n";
  io::write_text(cfg.out / "analyze_report.txt", os.str());

  if (cfg.plots) {
    std::vector<double> n1, n2, n3;
    for (const Vec3& v : p.sub.n) {
      n1.push_back(v[0]);
      n2.push_back(v[1]);
      n3.push_back(v[2]);
    }
    io::write_svg(cfg.out / "plot_b.svg", "input gain along the orbit", "tau", "b",
                  {{"b", p.sub.tau, p.sub.b}});
    io::write_svg(cfg.out / "plot_normal.svg", "normal direction components", "tau", "n",
                  {{"n1", p.sub.tau, n1}, {"n2", p.sub.tau, n2}, {"n3", p.sub.tau, n3}});
  }
}

SimConfig resolve_sim_config(const PipelineConfig& cfg, const Pipeline& p) {
  SimConfig sc = cfg.sim.config;
  sc.seed = cfg.seed;
  sc.pfl_gains = cfg.pfl;
  if (cfg.sim.horizon_periods > 0.0) {
    sc.horizon = cfg.sim.horizon_periods *
                 (cfg.sim.kind == SimSpec::Kind::Ltv ? kTauPeriod : p.orbit.T);
  }
  if (cfg.sim.dist_amplitude != 0.0) {
    const double amp = cfg.sim.dist_amplitude, om = cfg.sim.dist_omega;
    sc.disturbance = [amp, om](double t) { return amp * std::sin(om * t); };
  }
  return sc;
}

Vec3 clip_to_tube(const TransverseChart& chart, double tau, Vec3 xi, double frac) {
  const double cap = frac * chart.rho_ref(tau);
  if (std::abs(xi[2]) > cap) xi[2] = std::copysign(cap, xi[2]);
  return xi;
}

SimTrace run_one_sim(const PipelineConfig& cfg, const Pipeline& p, const SimConfig& sc,
                     const Vec3& xi0) {
  if (cfg.sim.kind == SimSpec::Kind::Ltv)
    return simulate_ltv(p.lin, p.sub, p.gains.gains, xi0, sc);
  const double tau_s =
      std::isfinite(cfg.sim.start_tau) ? cfg.sim.start_tau : p.chart.tau0();
  const Vec3 xi_clipped =
      clip_to_tube(p.chart, tau_s, xi0, 0.9 * cfg.chart.tube_fraction);
  const Vec4 x0 = p.chart.from_chart(tau_s, xi_clipped);
  return simulate_nonlinear(p.model, p.curve, cfg.pfl, p.chart, p.sub, p.gains.gains, x0, sc);
}

void write_sim_plots(const PipelineConfig& cfg, const Pipeline& p, const SimTrace& tr,
                     const std::string& suffix) {
  std::vector<double> x1, x2, x3;
  for (const Vec3& v : tr.xi) {
    x1.push_back(v[0]);
    x2.push_back(v[1]);
    x3.push_back(v[2]);
  }
  io::write_svg(cfg.out / ("plot_xi" + suffix + ".svg"), "transverse coordinates", "tau",
                "xi", {{"xi1", tr.tau, x1}, {"xi2", tr.tau, x2}, {"xi3", tr.tau, x3}});
  io::write_svg(cfg.out / ("plot_s" + suffix + ".svg"), "sliding variable", "tau", "s",
                {{"s", tr.tau, tr.s}});
  if (!tr.x.empty()) {
    std::vector<double> phi, dphi;
    for (const Vec4& v : tr.x) {
      phi.push_back(v[1]);
      dphi.push_back(v[3]);
    }
    io::write_svg(cfg.out / ("plot_phase" + suffix + ".svg"), "passive phase plane", "phi",
                  "dphi",
                  {{"trajectory", phi, dphi}, {"orbit", p.orbit.phi, p.orbit.dphi}});
  }
}

}  // namespace

int run_design(const PipelineConfig& cfg) {
  const Pipeline p = build_design(cfg);
  write_design_artifacts(cfg, p);
  log_info("design artifacts written to " + cfg.out.string());
  return 0;
}

int run_analyze(const PipelineConfig& cfg) {
  Pipeline p = build_design(cfg);
  extend_analysis(cfg, p);
  write_design_artifacts(cfg, p);
  write_analysis_artifacts(cfg, p);
  log_info("analysis artifacts written to " + cfg.out.string());
  return 0;
}

int run_gains(const PipelineConfig& cfg) {
  Pipeline p = build_design(cfg);
  extend_analysis(cfg, p);
  extend_gains(cfg, p);
  fs::create_directories(cfg.out);
  io::write_json(cfg.out / "gains.json", io::gain_report_json(p.gains));
  log_info("gains: k1 = " + io::fmt(p.gains.gains.k1) + ", k2 = " +
           io::fmt(p.gains.gains.k2) + " (bound " + io::fmt(p.gains.k2_lower_bound) + ")");
  return 0;
}

int run_simulate(const PipelineConfig& cfg) {
  Pipeline p = build_design(cfg);
  extend_analysis(cfg, p);
  extend_gains(cfg, p);
  fs::create_directories(cfg.out);
  io::write_json(cfg.out / "gains.json", io::gain_report_json(p.gains));
  const SimConfig sc = resolve_sim_config(cfg, p);

  if (cfg.monte_carlo <= 0) {
    const SimTrace tr = run_one_sim(cfg, p, sc, cfg.sim.xi0);
    io::write_trace_csv(cfg.out / "trace.csv", tr);
    io::write_json(cfg.out / "trace_summary.json", io::trace_summary(tr));
    if (cfg.plots) write_sim_plots(cfg, p, tr, "");
    log_info("trace written (" + std::to_string(tr.t.size()) + " samples)");
    return 0;
  }

  json runs = json::array();
  for (int i = 0; i < cfg.monte_carlo; ++i) {
    std::mt19937_64 rng(cfg.seed + std::uint64_t(i));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    if (dir.norm() < 1e-12) dir = Vec3(1, 0, 0);
    dir.normalize();
    const Vec3 xi0 = cfg.sim.mc_radius * std::cbrt(unif(rng)) * dir;
    SimConfig sci = sc;
    sci.seed = cfg.seed + std::uint64_t(i);
    const SimTrace tr = run_one_sim(cfg, p, sci, xi0);
    char name[64];
    std::snprintf(name, sizeof name, "trace_%03d.csv", i);
    io::write_trace_csv(cfg.out / name, tr);
    json summary = io::trace_summary(tr);
    summary["run"] = i;
    summary["xi0"] = {xi0[0], xi0[1], xi0[2]};
    runs.push_back(summary);
  }
  json agg;
  agg["schema_version"] = 1;
  agg["runs"] = cfg.monte_carlo;
  agg["seed"] = cfg.seed;
  double worst_contraction = -1.0, worst_reaching = -1.0, worst_final_dist = -1.0;
  for (const auto& r : runs) {
    if (r["contraction_per_period"].is_number())
      worst_contraction =
          std::max(worst_contraction, r["contraction_per_period"].get<double>());
    if (r["reaching_time"].is_number())
      worst_reaching = std::max(worst_reaching, r["reaching_time"].get<double>());
    if (r.contains("final_orbital_dist"))
      worst_final_dist = std::max(worst_final_dist, r["final_orbital_dist"].get<double>());
  }
  agg["worst_contraction_per_period"] =
      worst_contraction < 0 ? json(nullptr) : json(worst_contraction);
  agg["worst_reaching_time"] = worst_reaching < 0 ? json(nullptr) : json(worst_reaching);
  agg["worst_final_orbital_dist"] =
      worst_final_dist < 0 ? json(nullptr) : json(worst_final_dist);
  agg["per_run"] = runs;
  io::write_json(cfg.out / "aggregate.json", agg);
  log_info(std::to_string(cfg.monte_carlo) + " traces + aggregate written");
  return 0;
}

int run_report(const PipelineConfig& cfg) {
  auto load = [&](const char* name) -> json {
    std::ifstream in(cfg.out / name);
    if (!in) return nullptr;
    json j;
    try {
      in >> j;
    } catch (const json::exception&) {
      return nullptr;
    }
    return j;
  };
  const json orbit = load("orbit_meta.json");
  const json linmeta = load("linearization_meta.json");
  const json submeta = load("subspace_meta.json");
  const json gains = load("gains.json");
  const json summary = load("trace_summary.json");
  const json agg = load("aggregate.json");
  if (orbit.is_null() && linmeta.is_null() && submeta.is_null() && gains.is_null() &&
      summary.is_null() && agg.is_null())
    throw ConfigError("no artifacts found in " + cfg.out.string());

  std::ostringstream os;
  os << "pipeline report for " << cfg.out.string() << "\n"
     << "=================================\n";
  if (!orbit.is_null())
    os << "orbit: T = " << orbit["T"].dump() << " s, samples = " << orbit["samples"].dump()
       << ", equilibrium = " << orbit["equilibrium"].dump() << "\n";
  if (!linmeta.is_null())
    os << "linearization: n_grid = " << linmeta["n_grid"].dump()
       << ", max FD error = " << linmeta["max_fd_error"].dump() << "\n";
  if (!submeta.is_null()) {
    os << "multipliers (|mu|):";
    for (const auto& mu : submeta["multipliers"]) os << " " << mu["abs"].dump();
    os << "\nb zeros: " << submeta["zeros"].dump() << "\n";
  }
  if (!gains.is_null())
    os << "gains: k1 = " << gains["k1"].dump() << ", k2 = " << gains["k2"].dump()
       << ", bound = " << gains["k2_lower_bound"].dump()
       << ", margin = " << gains["margin"].dump() << "\n";
  if (!summary.is_null())
    os << "trace: samples = " << summary["samples"].dump()
       << ", reaching_time = " << summary["reaching_time"].dump()
       << ", tube_exits = " << summary["tube_exits"].dump() << "\n";
  if (!agg.is_null())
    os << "monte carlo: runs = " << agg["runs"].dump() << ", worst contraction = "
       << agg["worst_contraction_per_period"].dump() << "\n";
  const std::string text = os.str();
  std::cout << text;
  io::write_text(cfg.out / "report.txt", text);
  return 0;
}

}  // namespace orbistab
