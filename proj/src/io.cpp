#include "orbistab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "orbistab/errors.hpp"

namespace orbistab::io {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open for writing: " + p.string());
  out << contents;
  if (!out) throw ConfigError("write failed: " + p.string());
}

void write_json(const std::filesystem::path& p, const json& j) {
  write_text(p, j.dump(2) + "\n");
}

namespace {

json num_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

void append_row(std::string& s, std::initializer_list<double> vals) {
  bool first = true;
  for (double v : vals) {
    if (!first) s += ',';
    s += fmt(v);
    first = false;
  }
  s += '\n';
}

}  // namespace

void write_orbit_csv(const std::filesystem::path& p, const PeriodicOrbit& orbit) {
  std::string s = "t,phi,dphi,theta,dtheta\n";
  s.reserve(s.size() + 120 * orbit.t.size());
  for (std::size_t i = 0; i < orbit.t.size(); ++i) {
    append_row(s, {orbit.t[i], orbit.phi[i], orbit.dphi[i], orbit.theta[i],
                   orbit.dtheta[i]});
  }
  write_text(p, s);
}

json orbit_meta(const PeriodicOrbit& orbit, const VhcSpec& spec, const ReducedOptions& opt) {
  json j;
  j["schema_version"] = 1;
  j["T"] = orbit.T;
  j["equilibrium"] = orbit.equilibrium;
  j["samples"] = orbit.t.size();
  j["vhc"] = {{"c", spec.c},
              {"phi_min", spec.phi_min},
              {"phi_max", spec.phi_max},
              {"n_grid", spec.n_grid},
              {"theta_guess", spec.theta_guess},
              {"residual_tol", spec.residual_tol},
              {"fd_step", spec.fd_step},
              {"fd_step2", spec.fd_step2}};
  j["reduced"] = {{"rtol", opt.rtol},
                  {"atol", opt.atol},
                  {"closure_tol", opt.closure_tol},
                  {"alpha_floor", opt.alpha_floor},
                  {"max_horizon", opt.max_horizon},
                  {"n_store", opt.n_store}};
  return j;
}

void write_linearization_csv(const std::filesystem::path& p,
                             const TransverseLinearization& lin) {
  std::string s = "tau,A11,A12,A13,A21,A22,A23,A31,A32,A33,B1,B2,B3\n";
  s.reserve(s.size() + 280 * lin.tau.size());
  for (std::size_t i = 0; i < lin.tau.size(); ++i) {
    const Mat3& A = lin.A[i];
    const Vec3& B = lin.B[i];
    append_row(s, {lin.tau[i], A(0, 0), A(0, 1), A(0, 2), A(1, 0), A(1, 1), A(1, 2),
                   A(2, 0), A(2, 1), A(2, 2), B[0], B[1], B[2]});
  }
  write_text(p, s);
}

json linearization_meta(const TransverseLinearization& lin) {
  json j;
  j["schema_version"] = 1;
  j["n_grid"] = lin.tau.size();
  j["tau0"] = lin.tau0;
  j["T_tau"] = kTauPeriod;
  j["max_fd_error"] = lin.max_fd_error;
  j["min_delta"] = lin.min_delta;
  return j;
}

void write_subspace_csv(const std::filesystem::path& p, const StableSubspace& sub) {
  std::string s = "tau,n1,n2,n3,b\n";
  s.reserve(s.size() + 120 * sub.tau.size());
  for (std::size_t i = 0; i < sub.tau.size(); ++i) {
    append_row(s, {sub.tau[i], sub.n[i][0], sub.n[i][1], sub.n[i][2], sub.b[i]});
  }
  write_text(p, s);
}

json subspace_meta(const StableSubspace& sub, const Monodromy& mono) {
  json j;
  j["schema_version"] = 1;
  j["tau0"] = sub.tau0;
  j["T_tau"] = kTauPeriod;
  j["zeros"] = sub.zeros;
  j["b_max_abs"] = sub.b_max_abs;
  j["periods_used"] = sub.periods_used;
  j["period_mismatch"] = sub.period_mismatch;
  json mus = json::array();
  for (const auto& mu : mono.multipliers) {
    mus.push_back({{"re", mu.real()}, {"im", mu.imag()}, {"abs", std::abs(mu)}});
  }
  j["multipliers"] = mus;
  j["det_psi"] = mono.det;
  j["eigvec_cond"] = mono.eigvec_cond;
  return j;
}

json gain_report_json(const GainReport& rep) {
  json j;
  j["k1"] = rep.gains.k1;
  j["k2"] = rep.gains.k2;
  j["k2_lower_bound"] = rep.k2_lower_bound;
  j["margin"] = rep.margin;
  j["m"] = rep.m;
  j["d"] = rep.d;
  j["T_tau"] = rep.T_tau;
  return j;
}

void write_trace_csv(const std::filesystem::path& p, const SimTrace& tr) {
  const bool mechanical = !tr.x.empty();
  std::string s = mechanical
                      ? "t,theta,phi,dtheta,dphi,tau,xi1,xi2,xi3,s,b,w,u,orbital_dist,v_y\n"
                      : "tau,xi1,xi2,xi3,s,b,w,v_y\n";
  s.reserve(s.size() + 320 * tr.t.size());
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    if (mechanical) {
      append_row(s, {tr.t[i], tr.x[i][0], tr.x[i][1], tr.x[i][2], tr.x[i][3], tr.tau[i],
                     tr.xi[i][0], tr.xi[i][1], tr.xi[i][2], tr.s[i], tr.b[i], tr.w[i],
                     tr.u[i], tr.orbital_dist[i], tr.v_y[i]});
    } else {
      append_row(s, {tr.tau[i], tr.xi[i][0], tr.xi[i][1], tr.xi[i][2], tr.s[i], tr.b[i],
                     tr.w[i], tr.v_y[i]});
    }
  }
  write_text(p, s);
}

json trace_summary(const SimTrace& tr) {
  json j;
  j["schema_version"] = 1;
  j["samples"] = tr.t.size();
  j["t_start"] = tr.t.empty() ? 0.0 : tr.t.front();
  j["t_end"] = tr.t.empty() ? 0.0 : tr.t.back();
  j["reaching_time"] = num_or_null(tr.reaching_time);
  j["contraction_per_period"] = num_or_null(tr.contraction_per_period);
  j["tube_exits"] = tr.tube_exits;
  j["seed"] = tr.seed;
  double max_s = 0.0, max_dist = 0.0;
  for (double v : tr.s) max_s = std::max(max_s, std::abs(v));
  for (double v : tr.orbital_dist) max_dist = std::max(max_dist, v);
  j["max_abs_s"] = max_s;
  if (!tr.orbital_dist.empty()) {
    j["max_orbital_dist"] = max_dist;
    j["final_orbital_dist"] = tr.orbital_dist.back();
  }
  if (!tr.v_y.empty()) j["final_v_y"] = tr.v_y.back();
  return j;
}

void write_svg(const std::filesystem::path& p, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& curves) {
  const double W = 820, H = 520, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      if (first) {
        xmin = xmax = c.x[i];
        ymin = ymax = c.y[i];
        first = false;
      }
      xmin = std::min(xmin, c.x[i]);
      xmax = std::max(xmax, c.x[i]);
      ymin = std::min(ymin, c.y[i]);
      ymax = std::max(ymax, c.y[i]);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto X = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto Y = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  char buf[256];
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"820\" height=\"520\" "
       "viewBox=\"0 0 820 520\">\n";
  s += "<rect width=\"820\" height=\"520\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
                "text-anchor=\"middle\">%s</text>\n",
                W / 2, title.c_str());
  s += buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml,
                H - mb, W - mr, H - mb);
  s += buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, mt,
                ml, H - mb);
  s += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
                "text-anchor=\"middle\">%s</text>\n",
                (ml + W - mr) / 2, H - 12, xlabel.c_str());
  s += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"18\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
                "text-anchor=\"middle\" transform=\"rotate(-90 18 %g)\">%s</text>\n",
                (mt + H - mb) / 2, (mt + H - mb) / 2, ylabel.c_str());
  s += buf;
  for (const char* v : {"min", "max"}) {
    const bool lo = v[1] == 'i';
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"10\" "
                  "text-anchor=\"middle\">%.6g</text>\n",
                  lo ? X(xmin) : X(xmax), H - mb + 16, lo ? xmin : xmax);
    s += buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"10\" "
                  "text-anchor=\"end\">%.6g</text>\n",
                  ml - 6, (lo ? Y(ymin) : Y(ymax)) + 4, lo ? ymin : ymax);
    s += buf;
  }
  int ci = 0;
  for (const auto& c : curves) {
    s += "<polyline fill=\"none\" stroke=\"";
    s += palette[ci % 6];
    s += "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", X(c.x[i]), Y(c.y[i]));
      s += buf;
    }
    s += "\"/>\n";
    if (!c.label.empty()) {
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" "
                    "fill=\"%s\">%s</text>\n",
                    W - mr - 150.0, mt + 16.0 * (ci + 1), palette[ci % 6], c.label.c_str());
      s += buf;
    }
    ++ci;
  }
  s += "</svg>\n";
  write_text(p, s);
}

}  // namespace orbistab::io
