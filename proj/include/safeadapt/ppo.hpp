#pragma once

#include <functional>

#include "safeadapt/game.hpp"
#include "safeadapt/net.hpp"

namespace safeadapt {

struct PPOConfig {
  int batch_size = 1000;
  int minibatch_size = 128;
  int epochs_per_batch = 10;
  double clip_epsilon = 0.2;
  double learning_rate = 0.001;
  double gae_lambda = 0.95;
  double value_loss_coef = 0.5;

  void validate() const;
};

// Flattened whole-episode transitions from the acting agent's perspective.
// Observations are stored as columns. Episodes always end with done = 1;
// advantages and value targets are filled by compute_advantages.
struct RolloutBatch {
  Mat obs;
  std::vector<int> actions;
  Vec behavior_log_probs;
  Vec rewards;
  std::vector<std::uint8_t> dones;
  Vec advantages;
  Vec value_targets;

  int size() const { return static_cast<int>(actions.size()); }
};

enum class Seat { ego, oppo };

// Selects the policy an agent plays for one episode. Called once per episode
// with the episode's own rng stream, so ensemble membership resampling stays
// deterministic per seed.
using PolicyProvider =
    std::function<const PolicyParams&(int episode, RngStream& rng)>;

PolicyProvider fixed_policy(const PolicyParams& policy);
PolicyProvider ensemble_per_episode(const PolicyEnsemble& ensemble);

// Replaces the environment reward for a collected transition (shaped rewards).
using RewardOverride = std::function<double(const Transition& t)>;

ActionSampler policy_sampler(const PolicyParams& policy);

// Whole episodes plus the per-episode acting policies of both seats.
struct EpisodeSet {
  std::vector<Trajectory> episodes;
  std::vector<const PolicyParams*> ego_policies;
  std::vector<const PolicyParams*> oppo_policies;

  int total_steps() const;
};

// Rolls out whole episodes until at least min_steps steps are gathered.
// Episode e draws its policies from derive_seed(seed, "episode_policy", e)
// (ego first) and plays under derive_seed(seed, "episode", e).
EpisodeSet collect_episodes(const Game& game, const PolicyProvider& ego,
                            const PolicyProvider& oppo, int min_steps,
                            std::uint64_t seed);

// Collects whole episodes until at least cfg.batch_size steps are gathered.
// The batch holds the actor seat's observations, actions, rewards (ego reward
// negated for the opponent seat) and behavior log-probs.
RolloutBatch collect_batch(const Game& game, Seat actor_seat,
                           const PolicyProvider& actor,
                           const PolicyProvider& opponent,
                           const PPOConfig& cfg, std::uint64_t seed,
                           const RewardOverride& reward_override = nullptr);

// Extracts one seat's view of already-collected episodes.
RolloutBatch batch_from_trajectories(const std::vector<Trajectory>& episodes,
                                     Seat actor_seat,
                                     const std::vector<const PolicyParams*>&
                                         actor_policies,
                                     const RewardOverride& reward_override =
                                         nullptr);

// Generalized-advantage estimates computed backward over episodes (reset at
// done flags), value targets = raw advantage + V(s), then advantages
// normalized to mean 0 / std 1 with a 1e-8 std floor.
void compute_advantages(RolloutBatch& batch, const ValueParams& v,
                        double gamma, double lambda);

// epochs_per_batch passes of minibatch SGD on the clipped surrogate
// -E[min(rho A, clip(rho, 1 +- eps) A)] plus value_loss_coef * 0.5 * (V - target)^2
// value regression. Throws (leaving parameters untouched for the offending
// minibatch) if a loss or gradient goes non-finite.
void ppo_update(PolicyParams& policy, ValueParams& v, const RolloutBatch& batch,
                const PPOConfig& cfg, RngStream& rng);

}  // namespace safeadapt
