#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "safeadapt/config.hpp"
#include "safeadapt/eval.hpp"

namespace safeadapt {

// Curve CSV schema (one file per setting/seed run):
//   # safeadapt-curve v1
//   iteration,env_steps,exploiter1_reward,exploiter2_reward,setting,seed
struct CurveFile {
  std::string setting;
  std::uint64_t seed = 0;
  RewardCurve exploiter1;
  RewardCurve exploiter2;
};

void write_curve_csv(const CurveFile& curve, const std::string& path);
CurveFile read_curve_csv(const std::string& path);

// Runs the off-line phase and saves its artifacts under <out_dir>/offline.
void run_offline(const ExperimentConfig& cfg, std::ostream& log);

// Runs the on-line adaptation phase for cfg.protocol.setting from the saved
// off-line artifacts; writes curve.csv, final artifacts and periodic
// checkpoints (every run.checkpoint_interval iterations when > 0) under
// <out_dir>/adapt_<setting>_seed<seed>.
void run_adapt(const ExperimentConfig& cfg, std::ostream& log);

// Exploitability and head-to-head evaluation of a saved artifact directory.
void run_evaluate(const ExperimentConfig& cfg, const std::string& artifacts_dir,
                  std::ostream& out);

// Aggregates curve CSVs (files, or directories searched for curve.csv) into a
// metrics report. Curves of one setting are averaged pointwise across seeds;
// the window defaults to the second half of the step range.
MetricsReport aggregate_report(const std::vector<std::string>& inputs,
                               std::optional<double> window_from,
                               std::optional<double> window_to);

void run_report(const std::vector<std::string>& inputs,
                const std::string& out_csv, std::optional<double> window_from,
                std::optional<double> window_to, std::ostream& out);

}  // namespace safeadapt
