#include "safeadapt/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "safeadapt/checkpoint.hpp"

namespace safeadapt {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCurveHeaderLine = "# safeadapt-curve v1";
constexpr const char* kCurveColumns =
    "iteration,env_steps,exploiter1_reward,exploiter2_reward,setting,seed";
constexpr const char* kMetricsHeaderLine = "# safeadapt-metrics v1";

}  // namespace

void write_curve_csv(const CurveFile& curve, const std::string& path) {
  if (curve.exploiter1.points.size() != curve.exploiter2.points.size())
    throw std::invalid_argument("write_curve_csv: curve length mismatch");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << kCurveHeaderLine << "\n" << kCurveColumns << "\n";
  for (std::size_t i = 0; i < curve.exploiter1.points.size(); ++i) {
    const auto& [steps1, r1] = curve.exploiter1.points[i];
    const auto& [steps2, r2] = curve.exploiter2.points[i];
    if (steps1 != steps2)
      throw std::invalid_argument("write_curve_csv: env_steps mismatch");
    os << (i + 1) << ',' << format_double(steps1) << ',' << format_double(r1)
       << ',' << format_double(r2) << ',' << curve.setting << ',' << curve.seed
       << "\n";
  }
  if (!os) throw std::runtime_error("write failure on '" + path + "'");
}

CurveFile read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeaderLine)
    throw std::runtime_error("'" + path + "': format version mismatch");
  if (!std::getline(in, line) || line != kCurveColumns)
    throw std::runtime_error("'" + path + "': unexpected column header");

  CurveFile curve;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw std::runtime_error("'" + path + "': malformed row '" + line + "'");
    const double steps = parse_double(fields[1]);
    curve.exploiter1.add(steps, parse_double(fields[2]));
    curve.exploiter2.add(steps, parse_double(fields[3]));
    if (first) {
      curve.setting = fields[4];
      curve.seed = std::stoull(fields[5]);
      first = false;
    } else if (curve.setting != fields[4]) {
      throw std::runtime_error("'" + path + "': mixed settings in one file");
    }
  }
  if (first) throw std::runtime_error("'" + path + "': no curve rows");
  return curve;
}

void run_offline(const ExperimentConfig& cfg, std::ostream& log) {
  const auto game = make_game(cfg.game);
  log << "offline: game=" << game->spec().name << " N="
      << cfg.protocol.ensemble_size << " K1=" << cfg.protocol.k1
      << " K2=" << cfg.protocol.k2 << " seed=" << cfg.protocol.master_seed
      << "\n";
  const PhaseArtifacts art = offline_phase(*game, cfg.protocol, cfg.ppo);
  const std::string dir = cfg.run.out_dir + "/offline";
  save_artifacts(art, dir, cfg.protocol.master_seed, serialize_config(cfg));
  log << "offline: artifacts saved to " << dir << "\n";
}

void run_adapt(const ExperimentConfig& cfg, std::ostream& log) {
  const auto game = make_game(cfg.game);
  const std::string offline_dir = cfg.run.out_dir + "/offline";
  PhaseArtifacts art = load_artifacts(offline_dir);
  if (art.ego_ensemble.size() != cfg.protocol.ensemble_size)
    throw std::runtime_error(
        "adapt: ensemble size in '" + offline_dir + "' (" +
        std::to_string(art.ego_ensemble.size()) +
        ") does not match the configuration (" +
        std::to_string(cfg.protocol.ensemble_size) + ")");

  const std::string setting = to_string(cfg.protocol.setting);
  const std::string run_dir = cfg.run.out_dir + "/adapt_" + setting + "_seed" +
                              std::to_string(cfg.protocol.master_seed);
  fs::create_directories(run_dir);
  log << "adapt: setting=" << setting << " K3=" << cfg.protocol.k3
      << " seed=" << cfg.protocol.master_seed << "\n";

  IterationHook hook = nullptr;
  if (cfg.run.checkpoint_interval > 0) {
    hook = [&art, &cfg, &run_dir](int iteration) {
      if ((iteration + 1) % cfg.run.checkpoint_interval == 0)
        save_artifacts(art, run_dir + "/ckpt_" + std::to_string(iteration + 1),
                       cfg.protocol.master_seed, serialize_config(cfg));
    };
  }

  const OnlineResult result =
      online_phase(*game, art, cfg.protocol, cfg.adapt, cfg.ppo, hook);

  CurveFile curve{setting, cfg.protocol.master_seed, result.exploiter1_curve,
                  result.exploiter2_curve};
  write_curve_csv(curve, run_dir + "/curve.csv");
  save_artifacts(art, run_dir, cfg.protocol.master_seed, serialize_config(cfg));
  log << "adapt: curves and artifacts saved to " << run_dir << "\n";
}

void run_evaluate(const ExperimentConfig& cfg, const std::string& artifacts_dir,
                  std::ostream& out) {
  const auto game = make_game(cfg.game);
  const PhaseArtifacts art = load_artifacts(artifacts_dir);

  const double value = game_value(*game);
  out << "game " << game->spec().name << ", equilibrium ego value "
      << format_double(value) << "\n\n";

  out << "exploitability\n";
  out << "  ego ensemble mixture:  "
      << format_double(exploitability(*game, mixture_fn(art.ego_ensemble),
                                      Seat::ego, value))
      << "\n";
  out << "  oppo ensemble mixture: "
      << format_double(exploitability(*game, mixture_fn(art.oppo_ensemble),
                                      Seat::oppo, value))
      << "\n";
  out << "  exploiter1:            "
      << format_double(exploitability(*game, policy_fn(art.exploiter1),
                                      Seat::oppo, value))
      << "\n";
  out << "  opponent model:        "
      << format_double(exploitability(*game, policy_fn(art.opponent_model.policy),
                                      Seat::oppo, value))
      << "\n\n";

  const int episodes = cfg.protocol.eval_episodes;
  const std::uint64_t seed =
      derive_seed(cfg.protocol.master_seed, "evaluate", 0);
  out << "head-to-head mean ego return (" << episodes << " episodes)\n";
  out << "  vs exploiter1:     "
      << format_double(estimate_reward(*game, art.ego_ensemble, art.exploiter1,
                                       episodes, derive_seed(seed, "e1", 0),
                                       cfg.eval.discounted))
      << "\n";
  out << "  vs exploiter2:     "
      << format_double(estimate_reward(*game, art.ego_ensemble, art.exploiter2,
                                       episodes, derive_seed(seed, "e2", 0),
                                       cfg.eval.discounted))
      << "\n";
  out << "  vs opponent model: "
      << format_double(estimate_reward(*game, art.ego_ensemble,
                                       art.opponent_model.policy, episodes,
                                       derive_seed(seed, "om", 0),
                                       cfg.eval.discounted))
      << "\n";
}

namespace {

std::vector<std::string> collect_curve_files(
    const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const std::string& input : inputs) {
    if (fs::is_directory(input)) {
      for (const auto& entry : fs::recursive_directory_iterator(input))
        if (entry.is_regular_file() && entry.path().filename() == "curve.csv")
          files.push_back(entry.path().string());
    } else if (fs::is_regular_file(input)) {
      files.push_back(input);
    } else {
      throw std::runtime_error("report: no such file or directory '" + input +
                               "'");
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("report: no curve files found");
  return files;
}

RewardCurve average_curves(const std::vector<RewardCurve>& curves) {
  RewardCurve mean;
  const std::size_t n = curves.front().points.size();
  for (const RewardCurve& c : curves)
    if (c.points.size() != n)
      throw std::runtime_error("report: curves have mismatched lengths");
  for (std::size_t i = 0; i < n; ++i) {
    const double steps = curves.front().points[i].first;
    double sum = 0.0;
    for (const RewardCurve& c : curves) {
      if (c.points[i].first != steps)
        throw std::runtime_error("report: curves have mismatched step grids");
      sum += c.points[i].second;
    }
    mean.add(steps, sum / static_cast<double>(curves.size()));
  }
  return mean;
}

}  // namespace

MetricsReport aggregate_report(const std::vector<std::string>& inputs,
                               std::optional<double> window_from,
                               std::optional<double> window_to) {
  std::map<std::string, std::vector<RewardCurve>> first, second;
  for (const std::string& file : collect_curve_files(inputs)) {
    CurveFile curve = read_curve_csv(file);
    first[curve.setting].push_back(std::move(curve.exploiter1));
    second[curve.setting].push_back(std::move(curve.exploiter2));
  }

  std::map<std::string, SettingCurves> merged;
  for (auto& [setting, curves] : first)
    merged[setting].exploiter1 = average_curves(curves);
  for (auto& [setting, curves] : second)
    merged[setting].exploiter2 = average_curves(curves);

  const RewardCurve& reference = merged.begin()->second.exploiter1;
  const double lo = reference.points.front().first;
  const double hi = reference.points.back().first;
  const double from = window_from.value_or(lo + 0.5 * (hi - lo));
  const double to = window_to.value_or(hi);
  return normalized_metrics(merged, from, to);
}

void run_report(const std::vector<std::string>& inputs,
                const std::string& out_csv, std::optional<double> window_from,
                std::optional<double> window_to, std::ostream& out) {
  const MetricsReport report =
      aggregate_report(inputs, window_from, window_to);
  if (!out_csv.empty()) {
    std::ofstream os(out_csv);
    if (!os) throw std::runtime_error("cannot write '" + out_csv + "'");
    os << kMetricsHeaderLine << "\n";
    os << "setting,adaptation,robustness,overall,abc_normalized,"
          "degenerate_reference\n";
    for (const auto& [name, m] : report.rows)
      os << name << ',' << format_double(m.adaptation) << ','
         << format_double(m.robustness) << ',' << format_double(m.overall)
         << ',' << format_double(m.abc_normalized) << ','
         << (m.degenerate_reference ? 1 : 0) << "\n";
  }
  out << metrics_table(report);
}

}  // namespace safeadapt
