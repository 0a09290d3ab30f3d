#pragma once

#include "safeadapt/game.hpp"
#include "safeadapt/net.hpp"
#include "safeadapt/ppo.hpp"

namespace safeadapt {

// Interaction experience between the ego ensemble and the first exploiter.
// Immutable once collected; every transition carries the opponent's
// observation and action.
struct ExperienceDataset {
  std::vector<Trajectory> episodes;
  int total_steps = 0;
};

struct AdaptConfig {
  double lambda1 = 1.0;  // behavior-cloning weight
  double lambda2 = 1.0;  // environment-reward (RL) weight
  int disc_updates_per_iter = 5;
  int bc_minibatch = 128;
  double disc_learning_rate = 0.01;

  void validate() const;
};

// The ego agent's estimate of the opponent policy, trained by interleaving
// an adversarial ensemble-distance term, behavior cloning on the experience,
// and a reinforcement-learning term against the ego ensemble.
struct OpponentModel {
  PolicyParams policy;
  ValueParams value;
  Discriminator disc;
};

OpponentModel make_opponent_model(int obs_dim, int hidden_dim, int num_actions,
                                  RngStream& rng);

// Observation-action pairs feeding the discriminator.
struct ObsActionBatch {
  Mat obs;  // columns = samples
  std::vector<int> actions;

  int size() const { return static_cast<int>(actions.size()); }
};

ObsActionBatch oppo_pairs(const std::vector<Trajectory>& episodes);
ObsActionBatch oppo_pairs(const ExperienceDataset& data);

// Binary cross-entropy pushing D towards 0 on opponent-model data and towards
// 1 on ensemble data (the bounded form of the discrimination objective; same
// stationary points and descent directions, but saturating instead of
// diverging once the classes separate). -E_model[log D] then acts as a
// distance that shrinks as the model becomes indistinguishable from the
// ensemble.
double disc_loss(const Discriminator& d, const ObsActionBatch& model_data,
                 const ObsActionBatch& ensemble_data);
NetworkParams disc_loss_grad(const Discriminator& d,
                             const ObsActionBatch& model_data,
                             const ObsActionBatch& ensemble_data);

// `steps` gradient descent steps on the discrimination loss.
void disc_update(Discriminator& d, const ObsActionBatch& model_data,
                 const ObsActionBatch& ensemble_data, double learning_rate,
                 int steps = 1);

// log D(o, a); finite thanks to the output clamp. Maximizing it pushes the
// model towards actions the discriminator cannot tell from ensemble play.
double imitation_reward(const Discriminator& d, const Vec& obs, int action);

// Summed log-likelihood of the observed actions and its parameter gradient.
double bc_loss(const PolicyParams& policy, const ObsActionBatch& batch);
NetworkParams bc_loss_grad(const PolicyParams& policy,
                           const ObsActionBatch& batch);

// One ascent step on the summed log-likelihood of the opponent's (o, a) pairs
// over a uniformly sampled minibatch. `scaled_lr` already includes lambda1;
// zero means no-op.
void bc_step(PolicyParams& policy, const ExperienceDataset& data,
             int minibatch, double scaled_lr, RngStream& rng);

// Which loss terms an experimental setting enables.
struct OpponentModelTerms {
  bool use_reg = true;  // adversarial ensemble-distance term
  bool use_bc = true;   // behavior cloning term
  bool use_rl = true;   // environment-reward term
};

// One combined update of the opponent model, in order:
//  1. collect a batch of the model playing the opponent seat against ego
//     ensemble members (resampled per episode), with shaped per-step reward
//     r_imit(o, a) + lambda2 * r_oppo_env;
//  2. one (or disc_updates_per_iter) discriminator steps on this batch vs. a
//     fresh batch of opponent-ensemble-vs-ego-ensemble play;
//  3. one PPO update of the model policy on the shaped batch;
//  4. one behavior-cloning step weighted by lambda1.
// Disabled terms zero their reward channel / skip their update. Both
// ensembles are frozen for the duration of the call.
void opponent_model_step(const Game& game, OpponentModel& model,
                         const PolicyEnsemble& ego_ensemble,
                         const PolicyEnsemble& oppo_ensemble,
                         const ExperienceDataset& data, const AdaptConfig& cfg,
                         const PPOConfig& ppo_cfg, std::uint64_t seed,
                         const OpponentModelTerms& terms = {});

}  // namespace safeadapt
