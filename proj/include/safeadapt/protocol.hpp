#pragma once

#include "safeadapt/eval.hpp"
#include "safeadapt/game.hpp"
#include "safeadapt/opponent_model.hpp"
#include "safeadapt/ppo.hpp"

namespace safeadapt {

// Experimental settings: two references (oracle trains the ego directly
// against the first exploiter, ensemble trains it against the frozen opponent
// ensemble) and the opponent-model variants named by their enabled loss terms
// (reg = ensemble regularization, bc = behavior cloning, rl = environment
// reward).
enum class Setting { oracle, ensemble, reg_bc_rl, bc_rl, reg_rl, reg_bc };

Setting setting_from_string(const std::string& name);
std::string to_string(Setting setting);
const std::vector<Setting>& all_settings();

struct ProtocolConfig {
  int ensemble_size = 5;
  int k1 = 2000;  // off-line alternating iterations
  int k2 = 500;   // extra first-exploiter iterations
  int k3 = 2000;  // adaptation iterations
  int adaptation_episodes = 10;
  Setting setting = Setting::reg_bc_rl;
  std::uint64_t master_seed = 0;
  int eval_episodes = 20;  // evaluation episodes per curve point
  int hidden_units = 32;

  void validate() const;
};

enum class TrainingOpponent { opponent_model, exploiter1, oppo_ensemble };

struct SettingLosses {
  bool use_reg = false;
  bool use_bc = false;
  bool use_rl = false;
  TrainingOpponent training_opponent = TrainingOpponent::opponent_model;
};

SettingLosses setting_to_losses(Setting setting);

// Everything produced by the two experimental phases.
struct PhaseArtifacts {
  PolicyEnsemble ego_ensemble;
  PolicyEnsemble oppo_ensemble;
  std::vector<ValueParams> ego_values;
  std::vector<ValueParams> oppo_values;
  PolicyParams exploiter1;
  ValueParams exploiter1_value;
  PolicyParams exploiter2;
  ValueParams exploiter2_value;
  OpponentModel opponent_model;
  ExperienceDataset experience;
};

// Randomly initialized artifacts (the K1 = K2 = 0 state).
PhaseArtifacts init_artifacts(const Game& game, const ProtocolConfig& cfg);

// One alternating-training iteration: sample one member per ensemble, play
// one batch of episodes between them, then PPO-update each member on its own
// seat's view of those episodes.
void ensemble_training_step(const Game& game, PolicyEnsemble& ego_ensemble,
                            std::vector<ValueParams>& ego_values,
                            PolicyEnsemble& oppo_ensemble,
                            std::vector<ValueParams>& oppo_values,
                            const PPOConfig& ppo_cfg, std::uint64_t seed);

struct TrainedEnsembles {
  PolicyEnsemble ego;
  PolicyEnsemble oppo;
  std::vector<ValueParams> ego_values;
  std::vector<ValueParams> oppo_values;
};

// Initializes both ensembles and runs `iterations` ensemble training steps.
TrainedEnsembles train_ensembles(const Game& game, const ProtocolConfig& cfg,
                                 const PPOConfig& ppo_cfg, int iterations);

// K PPO updates of the exploiter (opponent seat) against ego ensemble members
// resampled uniformly per episode. The ensemble is frozen for the duration.
void train_exploiter(const Game& game, PolicyParams& exploiter,
                     ValueParams& exploiter_value,
                     const PolicyEnsemble& ego_ensemble, int iterations,
                     const PPOConfig& ppo_cfg, std::uint64_t seed);

// Off-line phase: K1 alternations of one ensemble training step and one
// first-exploiter step, then K2 further exploiter steps against the frozen
// ensembles. The ego side never stores experience against the exploiter, so
// the exploiter stays previously unseen.
PhaseArtifacts offline_phase(const Game& game, const ProtocolConfig& cfg,
                             const PPOConfig& ppo_cfg);

// Full ego-vs-first-exploiter episodes with the ego member resampled
// uniformly per episode.
ExperienceDataset collect_experience(const Game& game,
                                     const PolicyEnsemble& ego_ensemble,
                                     const PolicyParams& exploiter1,
                                     int episodes, std::uint64_t seed);

struct OnlineResult {
  RewardCurve exploiter1_curve;
  RewardCurve exploiter2_curve;
};

using IterationHook = std::function<void(int iteration)>;

// On-line adaptation phase. Initializes the second exploiter from the first,
// collects the interaction experience, then alternates K3 times between one
// safe-adaptation step (opponent-model update per the setting's loss terms,
// followed by one PPO update of a uniformly chosen ego member against the
// setting's training opponent) and one second-exploiter training step.
// Emits both exploiters' evaluation rewards per iteration
// (env_steps = iteration * ppo batch size). exploiter1 and the opponent
// ensemble are never modified.
OnlineResult online_phase(const Game& game, PhaseArtifacts& art,
                          const ProtocolConfig& cfg,
                          const AdaptConfig& adapt_cfg,
                          const PPOConfig& ppo_cfg,
                          const IterationHook& hook = nullptr);

}  // namespace safeadapt
