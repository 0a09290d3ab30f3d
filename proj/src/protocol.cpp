#include "safeadapt/protocol.hpp"

#include <stdexcept>

namespace safeadapt {

Setting setting_from_string(const std::string& name) {
  if (name == "oracle") return Setting::oracle;
  if (name == "ensemble") return Setting::ensemble;
  if (name == "reg_bc_rl") return Setting::reg_bc_rl;
  if (name == "bc_rl") return Setting::bc_rl;
  if (name == "reg_rl") return Setting::reg_rl;
  if (name == "reg_bc") return Setting::reg_bc;
  throw std::invalid_argument(
      "unknown setting '" + name +
      "' (expected oracle, ensemble, reg_bc_rl, bc_rl, reg_rl or reg_bc)");
}

std::string to_string(Setting setting) {
  switch (setting) {
    case Setting::oracle: return "oracle";
    case Setting::ensemble: return "ensemble";
    case Setting::reg_bc_rl: return "reg_bc_rl";
    case Setting::bc_rl: return "bc_rl";
    case Setting::reg_rl: return "reg_rl";
    case Setting::reg_bc: return "reg_bc";
  }
  throw std::invalid_argument("invalid setting id");
}

const std::vector<Setting>& all_settings() {
  static const std::vector<Setting> settings = {
      Setting::oracle, Setting::ensemble, Setting::reg_bc_rl,
      Setting::bc_rl,  Setting::reg_rl,   Setting::reg_bc};
  return settings;
}

void ProtocolConfig::validate() const {
  if (ensemble_size < 1)
    throw std::invalid_argument("ProtocolConfig: ensemble_size must be >= 1");
  if (k1 < 0 || k2 < 0 || k3 < 0)
    throw std::invalid_argument("ProtocolConfig: iteration counts must be >= 0");
  if (adaptation_episodes < 1 || eval_episodes < 1 || hidden_units < 1)
    throw std::invalid_argument("ProtocolConfig: counts must be positive");
}

SettingLosses setting_to_losses(Setting setting) {
  switch (setting) {
    case Setting::oracle:
      return {false, false, false, TrainingOpponent::exploiter1};
    case Setting::ensemble:
      return {false, false, false, TrainingOpponent::oppo_ensemble};
    case Setting::reg_bc_rl:
      return {true, true, true, TrainingOpponent::opponent_model};
    case Setting::bc_rl:
      return {false, true, true, TrainingOpponent::opponent_model};
    case Setting::reg_rl:
      return {true, false, true, TrainingOpponent::opponent_model};
    case Setting::reg_bc:
      return {true, true, false, TrainingOpponent::opponent_model};
  }
  throw std::invalid_argument("invalid setting id");
}

PhaseArtifacts init_artifacts(const Game& game, const ProtocolConfig& cfg) {
  cfg.validate();
  const GameSpec& spec = game.spec();
  const int h = cfg.hidden_units;
  PhaseArtifacts art;

  RngStream ego_rng(derive_seed(cfg.master_seed, "init_ego_ensemble", 0));
  art.ego_ensemble =
      make_ensemble(cfg.ensemble_size, spec.obs_dim_ego, h, spec.actions_ego,
                    ego_rng);
  RngStream ego_value_rng(derive_seed(cfg.master_seed, "init_ego_values", 0));
  for (int i = 0; i < cfg.ensemble_size; ++i)
    art.ego_values.push_back(make_value(spec.obs_dim_ego, h, ego_value_rng));

  RngStream oppo_rng(derive_seed(cfg.master_seed, "init_oppo_ensemble", 0));
  art.oppo_ensemble =
      make_ensemble(cfg.ensemble_size, spec.obs_dim_oppo, h, spec.actions_oppo,
                    oppo_rng);
  RngStream oppo_value_rng(derive_seed(cfg.master_seed, "init_oppo_values", 0));
  for (int i = 0; i < cfg.ensemble_size; ++i)
    art.oppo_values.push_back(make_value(spec.obs_dim_oppo, h, oppo_value_rng));

  RngStream exp_rng(derive_seed(cfg.master_seed, "init_exploiter1", 0));
  art.exploiter1 = make_policy(spec.obs_dim_oppo, h, spec.actions_oppo, exp_rng);
  art.exploiter1_value = make_value(spec.obs_dim_oppo, h, exp_rng);
  art.exploiter2 = art.exploiter1;
  art.exploiter2_value = art.exploiter1_value;

  RngStream model_rng(derive_seed(cfg.master_seed, "init_opponent_model", 0));
  art.opponent_model =
      make_opponent_model(spec.obs_dim_oppo, h, spec.actions_oppo, model_rng);
  return art;
}

void ensemble_training_step(const Game& game, PolicyEnsemble& ego_ensemble,
                            std::vector<ValueParams>& ego_values,
                            PolicyEnsemble& oppo_ensemble,
                            std::vector<ValueParams>& oppo_values,
                            const PPOConfig& ppo_cfg, std::uint64_t seed) {
  RngStream pick(derive_seed(seed, "pick", 0));
  const int j = pick.uniform_int(ego_ensemble.size());
  const int l = pick.uniform_int(oppo_ensemble.size());
  PolicyParams& ego = ego_ensemble.members[static_cast<std::size_t>(j)];
  PolicyParams& oppo = oppo_ensemble.members[static_cast<std::size_t>(l)];

  EpisodeSet set =
      collect_episodes(game, fixed_policy(ego), fixed_policy(oppo),
                       ppo_cfg.batch_size, derive_seed(seed, "episodes", 0));

  RolloutBatch ego_batch =
      batch_from_trajectories(set.episodes, Seat::ego, set.ego_policies);
  compute_advantages(ego_batch, ego_values[static_cast<std::size_t>(j)],
                     game.spec().discount, ppo_cfg.gae_lambda);
  RngStream ego_update(derive_seed(seed, "ego_update", 0));
  ppo_update(ego, ego_values[static_cast<std::size_t>(j)], ego_batch, ppo_cfg,
             ego_update);

  RolloutBatch oppo_batch =
      batch_from_trajectories(set.episodes, Seat::oppo, set.oppo_policies);
  compute_advantages(oppo_batch, oppo_values[static_cast<std::size_t>(l)],
                     game.spec().discount, ppo_cfg.gae_lambda);
  RngStream oppo_update(derive_seed(seed, "oppo_update", 0));
  ppo_update(oppo, oppo_values[static_cast<std::size_t>(l)], oppo_batch,
             ppo_cfg, oppo_update);
}

TrainedEnsembles train_ensembles(const Game& game, const ProtocolConfig& cfg,
                                 const PPOConfig& ppo_cfg, int iterations) {
  PhaseArtifacts art = init_artifacts(game, cfg);
  TrainedEnsembles out{std::move(art.ego_ensemble), std::move(art.oppo_ensemble),
                       std::move(art.ego_values), std::move(art.oppo_values)};
  for (int k = 0; k < iterations; ++k)
    ensemble_training_step(
        game, out.ego, out.ego_values, out.oppo, out.oppo_values, ppo_cfg,
        derive_seed(cfg.master_seed, "ens_iter", static_cast<std::uint64_t>(k)));
  return out;
}

void train_exploiter(const Game& game, PolicyParams& exploiter,
                     ValueParams& exploiter_value,
                     const PolicyEnsemble& ego_ensemble, int iterations,
                     const PPOConfig& ppo_cfg, std::uint64_t seed) {
  for (int k = 0; k < iterations; ++k) {
    const std::uint64_t sk =
        derive_seed(seed, "exploiter_iter", static_cast<std::uint64_t>(k));
    RolloutBatch batch = collect_batch(
        game, Seat::oppo, fixed_policy(exploiter),
        ensemble_per_episode(ego_ensemble), ppo_cfg, derive_seed(sk, "batch", 0));
    compute_advantages(batch, exploiter_value, game.spec().discount,
                       ppo_cfg.gae_lambda);
    RngStream update(derive_seed(sk, "update", 0));
    ppo_update(exploiter, exploiter_value, batch, ppo_cfg, update);
  }
}

PhaseArtifacts offline_phase(const Game& game, const ProtocolConfig& cfg,
                             const PPOConfig& ppo_cfg) {
  PhaseArtifacts art = init_artifacts(game, cfg);
  for (int k = 0; k < cfg.k1; ++k) {
    const std::uint64_t sk = derive_seed(cfg.master_seed, "offline_iter",
                                         static_cast<std::uint64_t>(k));
    ensemble_training_step(game, art.ego_ensemble, art.ego_values,
                           art.oppo_ensemble, art.oppo_values, ppo_cfg,
                           derive_seed(sk, "ensembles", 0));
    train_exploiter(game, art.exploiter1, art.exploiter1_value,
                    art.ego_ensemble, 1, ppo_cfg,
                    derive_seed(sk, "exploiter1", 0));
  }
  // Ensembles are frozen beyond this point.
  for (int k = 0; k < cfg.k2; ++k)
    train_exploiter(game, art.exploiter1, art.exploiter1_value,
                    art.ego_ensemble, 1, ppo_cfg,
                    derive_seed(cfg.master_seed, "offline_k2",
                                static_cast<std::uint64_t>(k)));
  art.exploiter2 = art.exploiter1;
  art.exploiter2_value = art.exploiter1_value;
  return art;
}

ExperienceDataset collect_experience(const Game& game,
                                     const PolicyEnsemble& ego_ensemble,
                                     const PolicyParams& exploiter1,
                                     int episodes, std::uint64_t seed) {
  if (episodes < 1)
    throw std::invalid_argument("collect_experience: episodes must be >= 1");
  ExperienceDataset data;
  for (int e = 0; e < episodes; ++e) {
    RngStream pick(derive_seed(seed, "episode_policy",
                               static_cast<std::uint64_t>(e)));
    const int member = ensemble_sample(ego_ensemble, pick);
    Trajectory traj = rollout(
        game,
        policy_sampler(ego_ensemble.members[static_cast<std::size_t>(member)]),
        policy_sampler(exploiter1),
        derive_seed(seed, "episode", static_cast<std::uint64_t>(e)));
    data.total_steps += static_cast<int>(traj.transitions.size());
    data.episodes.push_back(std::move(traj));
  }
  return data;
}

OnlineResult online_phase(const Game& game, PhaseArtifacts& art,
                          const ProtocolConfig& cfg,
                          const AdaptConfig& adapt_cfg,
                          const PPOConfig& ppo_cfg,
                          const IterationHook& hook) {
  cfg.validate();
  const SettingLosses losses = setting_to_losses(cfg.setting);

  art.exploiter2 = art.exploiter1;
  art.exploiter2_value = art.exploiter1_value;

  RngStream model_rng(derive_seed(cfg.master_seed, "adapt_model_init", 0));
  art.opponent_model =
      make_opponent_model(game.spec().obs_dim_oppo, cfg.hidden_units,
                          game.spec().actions_oppo, model_rng);
  art.experience = collect_experience(
      game, art.ego_ensemble, art.exploiter1, cfg.adaptation_episodes,
      derive_seed(cfg.master_seed, "collect_experience", 0));

  OnlineResult result;
  for (int k = 0; k < cfg.k3; ++k) {
    const std::uint64_t sk = derive_seed(cfg.master_seed, "adapt_iter",
                                         static_cast<std::uint64_t>(k));

    if (losses.training_opponent == TrainingOpponent::opponent_model)
      opponent_model_step(game, art.opponent_model, art.ego_ensemble,
                          art.oppo_ensemble, art.experience, adapt_cfg, ppo_cfg,
                          derive_seed(sk, "model", 0),
                          {losses.use_reg, losses.use_bc, losses.use_rl});

    // Ego update against the setting's training opponent.
    RngStream pick(derive_seed(sk, "ego_pick", 0));
    const int j = pick.uniform_int(art.ego_ensemble.size());
    const PolicyProvider opponent =
        losses.training_opponent == TrainingOpponent::opponent_model
            ? fixed_policy(art.opponent_model.policy)
            : losses.training_opponent == TrainingOpponent::exploiter1
                  ? fixed_policy(art.exploiter1)
                  : ensemble_per_episode(art.oppo_ensemble);
    PolicyParams& ego = art.ego_ensemble.members[static_cast<std::size_t>(j)];
    RolloutBatch batch =
        collect_batch(game, Seat::ego, fixed_policy(ego), opponent, ppo_cfg,
                      derive_seed(sk, "ego_batch", 0));
    compute_advantages(batch, art.ego_values[static_cast<std::size_t>(j)],
                       game.spec().discount, ppo_cfg.gae_lambda);
    RngStream update(derive_seed(sk, "ego_update", 0));
    ppo_update(ego, art.ego_values[static_cast<std::size_t>(j)], batch,
               ppo_cfg, update);

    // The second exploiter co-adapts to the moving ego ensemble.
    train_exploiter(game, art.exploiter2, art.exploiter2_value,
                    art.ego_ensemble, 1, ppo_cfg,
                    derive_seed(sk, "exploiter2", 0));

    const double env_steps =
        static_cast<double>(k + 1) * ppo_cfg.batch_size;
    result.exploiter1_curve.add(
        env_steps, -estimate_reward(game, art.ego_ensemble, art.exploiter1,
                                    cfg.eval_episodes,
                                    derive_seed(sk, "eval_exploiter1", 0)));
    result.exploiter2_curve.add(
        env_steps, -estimate_reward(game, art.ego_ensemble, art.exploiter2,
                                    cfg.eval_episodes,
                                    derive_seed(sk, "eval_exploiter2", 0)));
    if (hook) hook(k);
  }
  return result;
}

}  // namespace safeadapt
