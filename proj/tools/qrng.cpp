// qrng: validate, run, sweep and analyze phase-noise QRNG scenarios.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrng/app/commands.hpp"

namespace {

using namespace qrng::app;

void add_scenario_flags(CLI::App* cmd, ScenarioOptions& s) {
  cmd->add_option("-c,--config", s.config_path, "scenario JSON (or a run's metadata.json); defaults when omitted");
  cmd->add_option("--set", s.overrides, "override a config key, e.g. --set mzi.delay=250e-12")->take_all();
  cmd->add_option("--seed", s.seed, "master seed");
  cmd->add_option("--frames", s.frames, "frame count");
  cmd->add_option("--frame-length", s.frame_length, "samples per frame");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laser phase-noise QRNG simulator"};
  app.require_subcommand(1);

  ScenarioOptions scenario;
  unsigned workers = 1;

  auto* validate = app.add_subcommand("validate", "check the sampling-timing condition of a scenario");
  add_scenario_flags(validate, scenario);

  RunCommandOptions run_opts;
  auto* run = app.add_subcommand("run", "simulate, extract and analyze; write raw files and reports");
  add_scenario_flags(run, scenario);
  run->add_option("-o,--output", run_opts.output_dir, "output directory")->capture_default_str();
  run->add_option("-j,--workers", workers, "concurrent work units")->capture_default_str();

  std::string sweep_param;
  std::vector<std::string> sweep_values;
  std::optional<std::string> sweep_out;
  auto* sweep = app.add_subcommand("sweep", "run once per parameter value and aggregate to CSV");
  add_scenario_flags(sweep, scenario);
  sweep->add_option("-p,--param", sweep_param, "control_error_std, tau_c, T_d, T_S or white_noise_std")->required();
  sweep->add_option("-v,--values", sweep_values, "values, SI or with a unit suffix (650ps, 10ns)")
      ->required()
      ->delimiter(',');
  sweep->add_option("-o,--output", sweep_out, "CSV path (stdout when omitted)");
  sweep->add_option("-j,--workers", workers, "concurrent work units")->capture_default_str();

  std::string raw_path;
  AnalyzeOptions analyze_opts;
  std::optional<std::string> analyze_meta;
  std::optional<std::string> analyze_out;
  auto* analyze = app.add_subcommand("analyze", "battery, autocorrelation and bias of an existing raw file");
  analyze->add_option("raw", raw_path, "packed raw bit file")->required();
  analyze->add_option("-m,--metadata", analyze_meta, "sidecar metadata.json (default: next to the raw file)");
  analyze->add_option("-n,--bits", analyze_opts.bit_length, "bit length (default: sidecar, else 8 x file size)");
  analyze->add_option("--alpha", analyze_opts.alpha, "significance level")->capture_default_str();
  analyze->add_option("--max-lag", analyze_opts.max_lag, "autocorrelation lags")->capture_default_str();
  analyze->add_option("-o,--output", analyze_out, "write report.json and autocorr.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_success : exit_usage;
  }

  return run_guarded([&]() -> int {
    if (*validate) {
      return cmd_validate(load_scenario(scenario), std::cout) ? exit_success : exit_validation_failed;
    }
    if (*run) {
      run_opts.workers = workers;
      cmd_run(load_scenario(scenario), run_opts, std::cout);
      return exit_success;
    }
    if (*sweep) {
      SweepOptions opts;
      opts.parameter = sweep_parameter(sweep_param);
      for (const auto& v : sweep_values) opts.values.push_back(parse_quantity(v));
      opts.workers = workers;
      const auto cfg = load_scenario(scenario);
      std::ofstream file;
      if (sweep_out) {
        file.open(*sweep_out, std::ios::trunc);
        if (!file) throw qrng::IoError("cannot open '" + *sweep_out + "' for writing");
      }
      std::ostream& out = sweep_out ? static_cast<std::ostream&>(file) : std::cout;
      out << sweep_csv_header << "\n";
      cmd_sweep(cfg, opts, [&](const SweepPoint& p) { out << sweep_csv_row(opts.parameter, p) << "\n" << std::flush; });
      if (!out) throw qrng::IoError("write failed for sweep output");
      return exit_success;
    }
    if (analyze_meta) analyze_opts.metadata = *analyze_meta;
    if (analyze_out) analyze_opts.output_dir = *analyze_out;
    const auto report = cmd_analyze(raw_path, analyze_opts);
    std::cout << report.dump(2) << "\n";
    return report["passed"].get<bool>() ? exit_success : exit_validation_failed;
  });
}
