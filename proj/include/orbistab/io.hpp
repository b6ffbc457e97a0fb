#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "orbistab/floquet.hpp"
#include "orbistab/sim.hpp"
#include "orbistab/smc.hpp"
#include "orbistab/transverse.hpp"
#include "orbistab/vhc.hpp"

namespace orbistab::io {

/// Round-trip-exact decimal rendering of a double (%.17g).
std::string fmt(double v);

void write_text(const std::filesystem::path& p, const std::string& contents);
void write_json(const std::filesystem::path& p, const nlohmann::json& j);

void write_orbit_csv(const std::filesystem::path& p, const PeriodicOrbit& orbit);
nlohmann::json orbit_meta(const PeriodicOrbit& orbit, const VhcSpec& spec,
                          const ReducedOptions& opt);

void write_linearization_csv(const std::filesystem::path& p,
                             const TransverseLinearization& lin);
nlohmann::json linearization_meta(const TransverseLinearization& lin);

void write_subspace_csv(const std::filesystem::path& p, const StableSubspace& sub);
nlohmann::json subspace_meta(const StableSubspace& sub, const Monodromy& mono);

nlohmann::json gain_report_json(const GainReport& rep);

void write_trace_csv(const std::filesystem::path& p, const SimTrace& tr);
nlohmann::json trace_summary(const SimTrace& tr);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Minimal quick-look line plot (fixed palette, auto-scaled axes).
void write_svg(const std::filesystem::path& p, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& curves);

}  // namespace orbistab::io
