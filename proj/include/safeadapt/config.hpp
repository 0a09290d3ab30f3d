#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "safeadapt/game.hpp"
#include "safeadapt/opponent_model.hpp"
#include "safeadapt/ppo.hpp"
#include "safeadapt/protocol.hpp"

namespace safeadapt {

// Problems in user-supplied input (config files, overrides, CLI values).
// The CLI maps these to exit code 1; everything else is a runtime failure (2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GameConfig {
  std::string name = "grid_duel";
  int grid_rows = 5;
  int grid_cols = 5;
  int horizon = 25;
  double discount = 0.99;
  int matrix_rounds = 1;  // episode length for the matrix games
};

struct EvalSettings {
  bool discounted = false;  // estimate_reward return convention
};

struct RunConfig {
  std::string out_dir = "runs";
  int checkpoint_interval = 0;  // 0 = final checkpoint only
};

// Configuration is a flat, line-oriented key = value format with [section]
// headers and '#' comments. Every key has a default; unknown keys are
// rejected. The documented key list lives in docs/config_keys.md.
struct ExperimentConfig {
  GameConfig game;
  PPOConfig ppo;
  AdaptConfig adapt;
  ProtocolConfig protocol;
  EvalSettings eval;
  RunConfig run;
};

ExperimentConfig parse_config_file(const std::string& path);
void apply_config_text(ExperimentConfig& cfg, const std::string& text,
                       const std::string& origin);

// "section.key=value" command-line override.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// Resolved configuration as sorted (key, value) pairs; run.out_dir is
// excluded so manifests do not depend on the output location.
std::vector<std::pair<std::string, std::string>> serialize_config(
    const ExperimentConfig& cfg);

// All recognized keys with their current defaults, for documentation.
std::string config_key_reference();

std::unique_ptr<Game> make_game(const GameConfig& cfg);

}  // namespace safeadapt
