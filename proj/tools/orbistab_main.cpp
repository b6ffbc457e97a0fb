#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "orbistab/errors.hpp"
#include "orbistab/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::string model = "pendubot";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool plots = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config, "JSON configuration file");
  cmd->add_option("-m,--model", args.model, "model key when no config file is given")
      ->check(CLI::IsMember({"pendubot", "butterfly"}));
  cmd->add_option("-o,--out", args.out, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "random seed (overrides config)")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--plots", args.plots, "also write SVG quick-look plots");
}

orbistab::PipelineConfig resolve(const CommonArgs& args) {
  orbistab::PipelineConfig cfg = args.config.empty()
                                     ? orbistab::default_config(args.model)
                                     : orbistab::load_config_file(args.config);
  if (!args.out.empty()) cfg.out = args.out;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.plots) cfg.plots = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periodic-orbit design and sliding-mode stabilization pipeline"};
  app.require_subcommand(1);

  CommonArgs design_args, analyze_args, gains_args, sim_args, report_args;
  int monte_carlo = 0;

  CLI::App* design = app.add_subcommand("design", "solve the constraint and close the orbit");
  add_common(design, design_args);
  CLI::App* analyze =
      app.add_subcommand("analyze", "linearize around the orbit and extract the normal");
  add_common(analyze, analyze_args);
  CLI::App* gains = app.add_subcommand("gains", "synthesize sliding-mode gains");
  add_common(gains, gains_args);
  CLI::App* simulate = app.add_subcommand("simulate", "run the closed loop and record traces");
  add_common(simulate, sim_args);
  simulate->add_option("--monte-carlo", monte_carlo, "number of randomized runs")
      ->check(CLI::NonNegativeNumber);
  CLI::App* report = app.add_subcommand("report", "summarize artifacts from an output directory");
  add_common(report, report_args);

  try {
    app.parse(argc, argv);
    if (design->parsed()) return orbistab::run_design(resolve(design_args));
    if (analyze->parsed()) return orbistab::run_analyze(resolve(analyze_args));
    if (gains->parsed()) return orbistab::run_gains(resolve(gains_args));
    if (simulate->parsed()) {
      orbistab::PipelineConfig cfg = resolve(sim_args);
      cfg.monte_carlo = monte_carlo;
      return orbistab::run_simulate(cfg);
    }
    if (report->parsed()) return orbistab::run_report(resolve(report_args));
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const orbistab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case orbistab::Error::Kind::Config:
        return 2;
      case orbistab::Error::Kind::Numeric:
        return 3;
      case orbistab::Error::Kind::Validation:
        return 4;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
