#include "safeadapt/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace safeadapt {

void PPOConfig::validate() const {
  if (batch_size < 1 || minibatch_size < 1 || epochs_per_batch < 1)
    throw std::invalid_argument("PPOConfig: sizes must be positive");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw std::invalid_argument("PPOConfig: clip_epsilon must be in (0, 1)");
  if (learning_rate <= 0.0 || gae_lambda <= 0.0 || value_loss_coef < 0.0)
    throw std::invalid_argument("PPOConfig: rates must be positive");
}

PolicyProvider fixed_policy(const PolicyParams& policy) {
  return [&policy](int, RngStream&) -> const PolicyParams& { return policy; };
}

PolicyProvider ensemble_per_episode(const PolicyEnsemble& ensemble) {
  return [&ensemble](int, RngStream& rng) -> const PolicyParams& {
    return ensemble.members[ensemble_sample(ensemble, rng)];
  };
}

ActionSampler policy_sampler(const PolicyParams& policy) {
  return [&policy](const Vec& obs, RngStream& rng) {
    return rng.sample_categorical(action_probs(policy, obs));
  };
}

RolloutBatch batch_from_trajectories(
    const std::vector<Trajectory>& episodes, Seat actor_seat,
    const std::vector<const PolicyParams*>& actor_policies,
    const RewardOverride& reward_override) {
  if (episodes.size() != actor_policies.size())
    throw std::invalid_argument(
        "batch_from_trajectories: one actor policy per episode required");
  int total = 0;
  for (const Trajectory& ep : episodes)
    total += static_cast<int>(ep.transitions.size());
  if (total == 0)
    throw std::invalid_argument("batch_from_trajectories: empty batch");

  const bool ego = actor_seat == Seat::ego;
  const Eigen::Index obs_dim = ego ? episodes.front().transitions.front().obs_ego.size()
                                   : episodes.front().transitions.front().obs_oppo.size();
  RolloutBatch batch;
  batch.obs.resize(obs_dim, total);
  batch.actions.resize(static_cast<std::size_t>(total));
  batch.behavior_log_probs.resize(total);
  batch.rewards.resize(total);
  batch.dones.resize(static_cast<std::size_t>(total));

  int at = 0;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const PolicyParams& actor = *actor_policies[e];
    for (const Transition& t : episodes[e].transitions) {
      const Vec& obs = ego ? t.obs_ego : t.obs_oppo;
      const int action = ego ? t.action_ego : t.action_oppo;
      batch.obs.col(at) = obs;
      batch.actions[static_cast<std::size_t>(at)] = action;
      batch.behavior_log_probs[at] = log_prob(actor, obs, action);
      double reward = ego ? t.reward_ego : -t.reward_ego;
      if (reward_override) reward = reward_override(t);
      batch.rewards[at] = reward;
      batch.dones[static_cast<std::size_t>(at)] = t.done ? 1 : 0;
      ++at;
    }
  }
  return batch;
}

int EpisodeSet::total_steps() const {
  int steps = 0;
  for (const Trajectory& ep : episodes)
    steps += static_cast<int>(ep.transitions.size());
  return steps;
}

EpisodeSet collect_episodes(const Game& game, const PolicyProvider& ego,
                            const PolicyProvider& oppo, int min_steps,
                            std::uint64_t seed) {
  EpisodeSet out;
  int steps = 0;
  int episode = 0;
  while (steps < min_steps) {
    const std::uint64_t ep_seed =
        derive_seed(seed, "episode", static_cast<std::uint64_t>(episode));
    RngStream pick_rng(derive_seed(seed, "episode_policy",
                                   static_cast<std::uint64_t>(episode)));
    const PolicyParams& ego_policy = ego(episode, pick_rng);
    const PolicyParams& oppo_policy = oppo(episode, pick_rng);
    Trajectory traj = rollout(game, policy_sampler(ego_policy),
                              policy_sampler(oppo_policy), ep_seed);
    steps += static_cast<int>(traj.transitions.size());
    out.episodes.push_back(std::move(traj));
    out.ego_policies.push_back(&ego_policy);
    out.oppo_policies.push_back(&oppo_policy);
    ++episode;
  }
  return out;
}

RolloutBatch collect_batch(const Game& game, Seat actor_seat,
                           const PolicyProvider& actor,
                           const PolicyProvider& opponent,
                           const PPOConfig& cfg, std::uint64_t seed,
                           const RewardOverride& reward_override) {
  const bool ego = actor_seat == Seat::ego;
  EpisodeSet set = collect_episodes(game, ego ? actor : opponent,
                                    ego ? opponent : actor, cfg.batch_size,
                                    seed);
  return batch_from_trajectories(
      set.episodes, actor_seat, ego ? set.ego_policies : set.oppo_policies,
      reward_override);
}

void compute_advantages(RolloutBatch& batch, const ValueParams& v,
                        double gamma, double lambda) {
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("compute_advantages: empty batch");
  const Vec values = value_batch(v, batch.obs);

  Vec adv(n);
  double running = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const bool done = batch.dones[static_cast<std::size_t>(t)] != 0;
    const double next_value = (done || t == n - 1) ? 0.0 : values[t + 1];
    const double not_done = done ? 0.0 : 1.0;
    const double delta = batch.rewards[t] + gamma * next_value - values[t];
    running = delta + gamma * lambda * not_done * running;
    adv[t] = running;
  }
  batch.value_targets = adv + values;

  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().sum() / n;
  const double std_floor = std::max(std::sqrt(var), 1e-8);
  batch.advantages = (adv.array() - mean) / std_floor;
}

namespace {

struct MinibatchView {
  Mat obs;
  std::vector<int> actions;
  Vec old_log_probs;
  Vec advantages;
  Vec value_targets;
};

MinibatchView gather(const RolloutBatch& batch, const std::vector<int>& order,
                     int begin, int end) {
  MinibatchView mb;
  const int m = end - begin;
  mb.obs.resize(batch.obs.rows(), m);
  mb.actions.resize(static_cast<std::size_t>(m));
  mb.old_log_probs.resize(m);
  mb.advantages.resize(m);
  mb.value_targets.resize(m);
  for (int i = 0; i < m; ++i) {
    const int src = order[static_cast<std::size_t>(begin + i)];
    mb.obs.col(i) = batch.obs.col(src);
    mb.actions[static_cast<std::size_t>(i)] = batch.actions[static_cast<std::size_t>(src)];
    mb.old_log_probs[i] = batch.behavior_log_probs[src];
    mb.advantages[i] = batch.advantages[src];
    mb.value_targets[i] = batch.value_targets[src];
  }
  return mb;
}

}  // namespace

void ppo_update(PolicyParams& policy, ValueParams& v, const RolloutBatch& batch,
                const PPOConfig& cfg, RngStream& rng) {
  cfg.validate();
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty batch");
  if (batch.advantages.size() != n || batch.value_targets.size() != n)
    throw std::invalid_argument("ppo_update: run compute_advantages first");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    // Fisher-Yates with our own stream; std::shuffle is not seed-stable
    // across standard libraries.
    for (int i = n - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(rng.uniform_int(i + 1))]);

    for (int begin = 0; begin < n; begin += cfg.minibatch_size) {
      const int end = std::min(n, begin + cfg.minibatch_size);
      const int m = end - begin;
      MinibatchView mb = gather(batch, order, begin, end);

      // Policy: clipped surrogate.
      NetActivations pact = net_forward_cached(policy.net, mb.obs);
      Mat up = Mat::Zero(pact.y.rows(), m);
      double policy_loss = 0.0;
      for (int i = 0; i < m; ++i) {
        const Vec logits = pact.y.col(i);
        const Vec probs = softmax(logits);
        const int a = mb.actions[static_cast<std::size_t>(i)];
        const double lp = logits[a] - log_sum_exp(logits);
        const double ratio = std::exp(lp - mb.old_log_probs[i]);
        const double adv = mb.advantages[i];
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
        const double surr1 = ratio * adv;
        const double surr2 = clipped * adv;
        policy_loss -= std::min(surr1, surr2) / m;
        if (surr1 <= surr2) {
          // d(-surr1)/d logits = -adv * ratio * (e_a - probs)
          const double coef = -adv * ratio / m;
          up.col(i) = coef * (-probs);
          up(a, i) += coef;
        }
        // else: the clipped branch is active and constant in the parameters.
      }
      if (!std::isfinite(policy_loss))
        throw std::runtime_error(
            "ppo_update: non-finite policy loss (minibatch of " +
            std::to_string(m) + ", epoch " + std::to_string(epoch) + ")");
      NetworkParams pgrad = net_backward(policy.net, pact, up);

      // Value regression: value_loss_coef * 0.5 * (V - target)^2.
      NetActivations vact = net_forward_cached(v.net, mb.obs);
      Vec residual = vact.y.row(0).transpose() - mb.value_targets;
      Mat vup = (cfg.value_loss_coef / m) * residual.transpose();
      const double value_loss =
          cfg.value_loss_coef * 0.5 * residual.squaredNorm() / m;
      if (!std::isfinite(value_loss))
        throw std::runtime_error("ppo_update: non-finite value loss");
      NetworkParams vgrad = net_backward(v.net, vact, vup);

      if (!net_finite(pgrad) || !net_finite(vgrad))
        throw std::runtime_error("ppo_update: non-finite gradient");
      net_axpy(policy.net, pgrad, -cfg.learning_rate);
      net_axpy(v.net, vgrad, -cfg.learning_rate);
    }
  }
  if (!net_finite(policy.net) || !net_finite(v.net))
    throw std::runtime_error("ppo_update: parameters diverged");
}

}  // namespace safeadapt
