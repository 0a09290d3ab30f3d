#include "safeadapt/opponent_model.hpp"

#include <cmath>
#include <stdexcept>

namespace safeadapt {

void AdaptConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0)
    throw std::invalid_argument("AdaptConfig: lambda weights must be >= 0");
  if (disc_updates_per_iter < 1 || bc_minibatch < 1)
    throw std::invalid_argument("AdaptConfig: counts must be positive");
  if (disc_learning_rate <= 0.0)
    throw std::invalid_argument("AdaptConfig: disc_learning_rate must be > 0");
}

OpponentModel make_opponent_model(int obs_dim, int hidden_dim, int num_actions,
                                  RngStream& rng) {
  OpponentModel m;
  m.policy = make_policy(obs_dim, hidden_dim, num_actions, rng);
  m.value = make_value(obs_dim, hidden_dim, rng);
  m.disc = make_discriminator(obs_dim, num_actions, hidden_dim, rng);
  return m;
}

ObsActionBatch oppo_pairs(const std::vector<Trajectory>& episodes) {
  int total = 0;
  for (const Trajectory& ep : episodes)
    total += static_cast<int>(ep.transitions.size());
  if (total == 0) throw std::invalid_argument("oppo_pairs: no transitions");
  ObsActionBatch batch;
  batch.obs.resize(episodes.front().transitions.front().obs_oppo.size(), total);
  batch.actions.resize(static_cast<std::size_t>(total));
  int at = 0;
  for (const Trajectory& ep : episodes)
    for (const Transition& t : ep.transitions) {
      batch.obs.col(at) = t.obs_oppo;
      batch.actions[static_cast<std::size_t>(at)] = t.action_oppo;
      ++at;
    }
  return batch;
}

ObsActionBatch oppo_pairs(const ExperienceDataset& data) {
  return oppo_pairs(data.episodes);
}

namespace {

Mat disc_inputs(const Discriminator& d, const ObsActionBatch& batch) {
  Mat x = Mat::Zero(batch.obs.rows() + d.num_actions, batch.size());
  x.topRows(batch.obs.rows()) = batch.obs;
  for (int i = 0; i < batch.size(); ++i) {
    const int a = batch.actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= d.num_actions)
      throw std::invalid_argument("discriminator: action out of range");
    x(batch.obs.rows() + a, i) = 1.0;
  }
  return x;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

double disc_loss(const Discriminator& d, const ObsActionBatch& model_data,
                 const ObsActionBatch& ensemble_data) {
  if (model_data.size() == 0 || ensemble_data.size() == 0)
    throw std::invalid_argument("disc_loss: both batches must be non-empty");
  const Vec model_logits =
      net_forward_batch(d.net, disc_inputs(d, model_data)).row(0).transpose();
  const Vec ens_logits =
      net_forward_batch(d.net, disc_inputs(d, ensemble_data)).row(0).transpose();
  // -log(1 - sigma(z)) = softplus(z); -log sigma(z) = softplus(-z).
  double loss = 0.0;
  for (Eigen::Index i = 0; i < model_logits.size(); ++i)
    loss += softplus(model_logits[i]) / model_logits.size();
  for (Eigen::Index i = 0; i < ens_logits.size(); ++i)
    loss += softplus(-ens_logits[i]) / ens_logits.size();
  return loss;
}

NetworkParams disc_loss_grad(const Discriminator& d,
                             const ObsActionBatch& model_data,
                             const ObsActionBatch& ensemble_data) {
  const Mat model_x = disc_inputs(d, model_data);
  const Mat ens_x = disc_inputs(d, ensemble_data);
  NetActivations model_act = net_forward_cached(d.net, model_x);
  NetActivations ens_act = net_forward_cached(d.net, ens_x);

  // d/dz [-log(1 - sigma(z))] = sigma(z); d/dz [-log sigma(z)] = -sigma(-z).
  Mat model_up(1, model_data.size());
  for (int i = 0; i < model_data.size(); ++i)
    model_up(0, i) =
        1.0 / (1.0 + std::exp(-model_act.y(0, i))) / model_data.size();
  Mat ens_up(1, ensemble_data.size());
  for (int i = 0; i < ensemble_data.size(); ++i)
    ens_up(0, i) =
        -1.0 / (1.0 + std::exp(ens_act.y(0, i))) / ensemble_data.size();

  NetworkParams grad = net_backward(d.net, model_act, model_up);
  net_axpy(grad, net_backward(d.net, ens_act, ens_up), 1.0);
  return grad;
}

void disc_update(Discriminator& d, const ObsActionBatch& model_data,
                 const ObsActionBatch& ensemble_data, double learning_rate,
                 int steps) {
  for (int s = 0; s < steps; ++s) {
    const double loss = disc_loss(d, model_data, ensemble_data);
    if (!std::isfinite(loss))
      throw std::runtime_error("disc_update: non-finite discrimination loss");
    NetworkParams grad = disc_loss_grad(d, model_data, ensemble_data);
    if (!net_finite(grad))
      throw std::runtime_error("disc_update: non-finite gradient");
    net_axpy(d.net, grad, -learning_rate);
  }
}

double imitation_reward(const Discriminator& d, const Vec& obs, int action) {
  return std::log(disc_forward(d, obs, action));
}

double bc_loss(const PolicyParams& policy, const ObsActionBatch& batch) {
  if (batch.size() == 0)
    throw std::invalid_argument("bc_loss: empty batch");
  double total = 0.0;
  for (int i = 0; i < batch.size(); ++i)
    total += log_prob(policy, batch.obs.col(i),
                      batch.actions[static_cast<std::size_t>(i)]);
  return total;
}

NetworkParams bc_loss_grad(const PolicyParams& policy,
                           const ObsActionBatch& batch) {
  const int m = batch.size();
  if (m == 0) throw std::invalid_argument("bc_loss_grad: empty batch");
  NetActivations act = net_forward_cached(policy.net, batch.obs);
  Mat up(act.y.rows(), m);
  for (int i = 0; i < m; ++i) {
    const Vec probs = softmax(act.y.col(i));
    up.col(i) = -probs;
    up(batch.actions[static_cast<std::size_t>(i)], i) += 1.0;
  }
  return net_backward(policy.net, act, up);
}

void bc_step(PolicyParams& policy, const ExperienceDataset& data,
             int minibatch, double scaled_lr, RngStream& rng) {
  if (scaled_lr == 0.0) return;
  if (data.total_steps == 0)
    throw std::invalid_argument("bc_step: empty experience dataset");

  // Flatten (episode, transition) indexing once per call.
  std::vector<const Transition*> all;
  all.reserve(static_cast<std::size_t>(data.total_steps));
  for (const Trajectory& ep : data.episodes)
    for (const Transition& t : ep.transitions) all.push_back(&t);

  const int m = std::min<int>(minibatch, static_cast<int>(all.size()));
  ObsActionBatch batch;
  batch.obs.resize(all.front()->obs_oppo.size(), m);
  batch.actions.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const Transition* t = all[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(all.size())))];
    batch.obs.col(i) = t->obs_oppo;
    batch.actions[static_cast<std::size_t>(i)] = t->action_oppo;
  }

  NetworkParams grad = bc_loss_grad(policy, batch);
  if (!net_finite(grad))
    throw std::runtime_error("bc_step: non-finite gradient");
  net_axpy(policy.net, grad, scaled_lr);  // ascent on log-likelihood
}

void opponent_model_step(const Game& game, OpponentModel& model,
                         const PolicyEnsemble& ego_ensemble,
                         const PolicyEnsemble& oppo_ensemble,
                         const ExperienceDataset& data, const AdaptConfig& cfg,
                         const PPOConfig& ppo_cfg, std::uint64_t seed,
                         const OpponentModelTerms& terms) {
  cfg.validate();

  const Discriminator& disc = model.disc;
  RewardOverride shaped = [&disc, &cfg, &terms](const Transition& t) {
    double r = 0.0;
    if (terms.use_reg)
      r += imitation_reward(disc, t.obs_oppo, t.action_oppo);
    if (terms.use_rl) r += cfg.lambda2 * (-t.reward_ego);
    return r;
  };

  RolloutBatch batch = collect_batch(
      game, Seat::oppo, fixed_policy(model.policy),
      ensemble_per_episode(ego_ensemble), ppo_cfg,
      derive_seed(seed, "model_batch", 0), shaped);

  if (terms.use_reg) {
    // Fresh ensemble-occupancy sample each iteration; the ego ensemble keeps
    // moving, so cached data would bias the distance.
    RolloutBatch ens_batch = collect_batch(
        game, Seat::oppo, ensemble_per_episode(oppo_ensemble),
        ensemble_per_episode(ego_ensemble), ppo_cfg,
        derive_seed(seed, "ensemble_batch", 0));
    ObsActionBatch model_pairs{batch.obs, batch.actions};
    ObsActionBatch ens_pairs{ens_batch.obs, ens_batch.actions};
    disc_update(model.disc, model_pairs, ens_pairs, cfg.disc_learning_rate,
                cfg.disc_updates_per_iter);
  }

  compute_advantages(batch, model.value, game.spec().discount,
                     ppo_cfg.gae_lambda);
  RngStream update_rng(derive_seed(seed, "model_update", 0));
  ppo_update(model.policy, model.value, batch, ppo_cfg, update_rng);

  if (terms.use_bc && cfg.lambda1 > 0.0) {
    RngStream bc_rng(derive_seed(seed, "model_bc", 0));
    bc_step(model.policy, data, cfg.bc_minibatch,
            ppo_cfg.learning_rate * cfg.lambda1, bc_rng);
  }
}

}  // namespace safeadapt
