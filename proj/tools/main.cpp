#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "safeadapt/runner.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> setting;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_setting) {
  cmd->add_option("--config", opts.config_path, "configuration file");
  cmd->add_option("--set", opts.overrides,
                  "override as section.key=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "master seed override");
  cmd->add_option("--out", opts.out_dir, "output directory override");
  if (with_setting)
    cmd->add_option("--setting", opts.setting,
                    "experimental setting (oracle, ensemble, reg_bc_rl, "
                    "bc_rl, reg_rl, reg_bc)");
}

safeadapt::ExperimentConfig resolve_config(const CommonOptions& opts) {
  safeadapt::ExperimentConfig cfg;
  if (!opts.config_path.empty())
    cfg = safeadapt::parse_config_file(opts.config_path);
  for (const std::string& assignment : opts.overrides)
    safeadapt::apply_override(cfg, assignment);
  if (opts.seed) cfg.protocol.master_seed = *opts.seed;
  if (opts.out_dir) cfg.run.out_dir = *opts.out_dir;
  if (opts.setting) {
    try {
      cfg.protocol.setting = safeadapt::setting_from_string(*opts.setting);
    } catch (const std::invalid_argument& e) {
      throw safeadapt::ConfigError(e.what());
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-player zero-sum Markov game training and evaluation "
               "harness: ensemble training, exploiter training and regularized "
               "opponent-model adaptation"};
  app.require_subcommand(1);

  CommonOptions offline_opts, adapt_opts, eval_opts, report_opts;

  CLI::App* offline =
      app.add_subcommand("offline", "run the off-line training phase");
  add_common(offline, offline_opts, false);

  CLI::App* adapt = app.add_subcommand(
      "adapt", "run the on-line adaptation phase from saved offline artifacts");
  add_common(adapt, adapt_opts, true);

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "exploitability and head-to-head of saved checkpoints");
  add_common(evaluate, eval_opts, false);
  std::string artifacts_dir;
  evaluate->add_option("--artifacts", artifacts_dir,
                       "artifact directory (default <out>/offline)");

  CLI::App* report = app.add_subcommand(
      "report", "aggregate curve CSVs into the normalized metrics report");
  std::vector<std::string> report_inputs;
  std::string report_csv;
  std::optional<double> window_from, window_to;
  report->add_option("inputs", report_inputs,
                     "curve.csv files or run directories")
      ->required();
  report->add_option("--out-csv", report_csv, "metrics CSV output path");
  report->add_option("--from", window_from, "window start in env steps");
  report->add_option("--to", window_to, "window end in env steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (offline->parsed()) {
      safeadapt::run_offline(resolve_config(offline_opts), std::cout);
    } else if (adapt->parsed()) {
      safeadapt::run_adapt(resolve_config(adapt_opts), std::cout);
    } else if (evaluate->parsed()) {
      const safeadapt::ExperimentConfig cfg = resolve_config(eval_opts);
      const std::string dir =
          artifacts_dir.empty() ? cfg.run.out_dir + "/offline" : artifacts_dir;
      safeadapt::run_evaluate(cfg, dir, std::cout);
    } else if (report->parsed()) {
      safeadapt::run_report(report_inputs, report_csv, window_from, window_to,
                            std::cout);
    }
  } catch (const safeadapt::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
