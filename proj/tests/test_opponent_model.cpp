#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "safeadapt/opponent_model.hpp"
#include "test_util.hpp"

using namespace safeadapt;

namespace {

PolicyParams forced_action_policy(int obs_dim, int actions, int forced) {
  RngStream rng(0);
  PolicyParams p = make_policy(obs_dim, 4, actions, rng);
  p.net = zeros_like(p.net);
  p.net.b3[forced] = 25.0;
  return p;
}

// Observation-action pairs with the constant matrix-game observation and
// actions drawn from `probs`.
ObsActionBatch sampled_pairs(const Vec& probs, int n, std::uint64_t seed) {
  ObsActionBatch batch;
  batch.obs = Mat::Ones(1, n);
  batch.actions.resize(static_cast<std::size_t>(n));
  RngStream rng(seed);
  for (int i = 0; i < n; ++i)
    batch.actions[static_cast<std::size_t>(i)] = rng.sample_categorical(probs);
  return batch;
}

bool datasets_equal(const ExperienceDataset& a, const ExperienceDataset& b) {
  if (a.total_steps != b.total_steps || a.episodes.size() != b.episodes.size())
    return false;
  for (std::size_t e = 0; e < a.episodes.size(); ++e) {
    const auto& ta = a.episodes[e].transitions;
    const auto& tb = b.episodes[e].transitions;
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
      if (ta[i].action_ego != tb[i].action_ego ||
          ta[i].action_oppo != tb[i].action_oppo ||
          ta[i].reward_ego != tb[i].reward_ego ||
          ta[i].obs_oppo != tb[i].obs_oppo)
        return false;
  }
  return true;
}

ExperienceDataset dataset_from_policies(const Game& game,
                                        const PolicyParams& ego,
                                        const PolicyParams& oppo, int episodes,
                                        std::uint64_t seed) {
  ExperienceDataset data;
  for (int e = 0; e < episodes; ++e) {
    Trajectory traj =
        rollout(game, policy_sampler(ego), policy_sampler(oppo),
                derive_seed(seed, "episode", static_cast<std::uint64_t>(e)));
    data.total_steps += static_cast<int>(traj.transitions.size());
    data.episodes.push_back(std::move(traj));
  }
  return data;
}

}  // namespace

TEST_CASE("adapt config validation") {
  AdaptConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lambda1 = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AdaptConfig{};
  cfg.disc_updates_per_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("discrimination loss gradient matches finite differences") {
  for (int point = 0; point < 10; ++point) {
    RngStream rng(300 + static_cast<std::uint64_t>(point));
    Discriminator d = make_discriminator(2, 3, 5, rng);
    test::randomize(d.net, rng);
    ObsActionBatch model_data, ens_data;
    model_data.obs = Mat::Random(2, 4);
    model_data.actions = {0, 1, 2, 1};
    ens_data.obs = Mat::Random(2, 4);
    ens_data.actions = {2, 0, 1, 0};
    const NetworkParams grad = disc_loss_grad(d, model_data, ens_data);
    const Vec fd = test::fd_gradient(
        d.net, [&] { return disc_loss(d, model_data, ens_data); });
    CHECK(test::relative_error(net_flatten(grad), fd) < 1e-3);
  }
}

TEST_CASE("discriminator cannot separate identical distributions") {
  Vec probs(3);
  probs << 0.5, 0.3, 0.2;
  const ObsActionBatch model_data = sampled_pairs(probs, 1500, 1);
  const ObsActionBatch ens_data = sampled_pairs(probs, 1500, 2);
  RngStream rng(3);
  Discriminator d = make_discriminator(1, 3, 16, rng);
  disc_update(d, model_data, ens_data, 0.05, 400);

  const ObsActionBatch fresh = sampled_pairs(probs, 1000, 9);
  double mean = 0.0;
  for (int i = 0; i < fresh.size(); ++i)
    mean += disc_forward(d, fresh.obs.col(i),
                         fresh.actions[static_cast<std::size_t>(i)]);
  mean /= fresh.size();
  CHECK(mean > 0.45);
  CHECK(mean < 0.55);
}

TEST_CASE("discriminator separates disjoint supports") {
  // model plays only action 0, the ensemble only actions 1 and 2
  Vec model_probs(3), ens_probs(3);
  model_probs << 1.0, 0.0, 0.0;
  ens_probs << 0.0, 0.5, 0.5;
  const ObsActionBatch model_data = sampled_pairs(model_probs, 600, 4);
  const ObsActionBatch ens_data = sampled_pairs(ens_probs, 600, 5);
  RngStream rng(6);
  Discriminator d = make_discriminator(1, 3, 16, rng);
  disc_update(d, model_data, ens_data, 0.1, 600);

  // trained towards 0 on model data and towards 1 on ensemble data, so
  // -E[log D] is large for distinguishable model play
  double model_mean = 0.0, ens_mean = 0.0;
  for (int i = 0; i < 200; ++i) {
    model_mean += disc_forward(d, Vec::Ones(1), 0) / 200.0;
    ens_mean += disc_forward(d, Vec::Ones(1), 1 + i % 2) / 200.0;
  }
  CHECK(model_mean < 0.1);
  CHECK(ens_mean > 0.9);
}

TEST_CASE("imitation reward is the clamped log discriminator output") {
  RngStream rng(7);
  Discriminator d = make_discriminator(2, 3, 4, rng);
  d.net = zeros_like(d.net);
  CHECK(imitation_reward(d, Vec::Zero(2), 0) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));
  d.net.b3 << 100.0;
  CHECK(imitation_reward(d, Vec::Zero(2), 1) ==
        doctest::Approx(std::log(1.0 - 1e-7)).epsilon(1e-9));
  d.net.b3 << -100.0;
  CHECK(imitation_reward(d, Vec::Zero(2), 2) ==
        doctest::Approx(std::log(1e-7)).epsilon(1e-9));
  CHECK(imitation_reward(d, Vec::Zero(2), 2) ==
        doctest::Approx(-16.118).epsilon(1e-3));
}

TEST_CASE("bc loss gradient matches finite differences") {
  for (int point = 0; point < 10; ++point) {
    RngStream rng(400 + static_cast<std::uint64_t>(point));
    PolicyParams policy = make_policy(2, 5, 3, rng);
    test::randomize(policy.net, rng);
    ObsActionBatch batch;
    batch.obs = Mat::Random(2, 5);
    batch.actions = {0, 2, 1, 1, 0};
    const NetworkParams grad = bc_loss_grad(policy, batch);
    const Vec fd =
        test::fd_gradient(policy.net, [&] { return bc_loss(policy, batch); });
    CHECK(test::relative_error(net_flatten(grad), fd) < 1e-3);
  }
}

TEST_CASE("bc with zero weight leaves parameters untouched") {
  const MatrixGame game = MatrixGame::rps();
  const ExperienceDataset data = dataset_from_policies(
      game, forced_action_policy(1, 3, 0), forced_action_policy(1, 3, 2), 10, 1);
  RngStream rng(2);
  PolicyParams policy = make_policy(1, 4, 3, rng);
  const PolicyParams before = policy;
  RngStream bc_rng(3);
  bc_step(policy, data, 32, 0.0, bc_rng);
  CHECK(net_equal(policy.net, before.net));
}

TEST_CASE("bc recovers a deterministic opponent from its dataset") {
  const MatrixGame game = MatrixGame::rps();
  // the data-generating opponent always plays scissors
  const ExperienceDataset data = dataset_from_policies(
      game, forced_action_policy(1, 3, 0), forced_action_policy(1, 3, 2), 10, 4);
  RngStream rng(5);
  PolicyParams model = make_policy(1, 4, 3, rng);
  RngStream bc_rng(6);
  for (int k = 0; k < 800; ++k) bc_step(model, data, 32, 0.002, bc_rng);
  const Vec probs = action_probs(model, Vec::Ones(1));
  CHECK(probs[2] > 0.95);
}

TEST_CASE("opponent model step leaves the frozen inputs bit-identical") {
  const MatrixGame game = MatrixGame::rps();
  RngStream rng(11);
  const PolicyEnsemble ego = make_ensemble(3, 1, 8, 3, rng);
  const PolicyEnsemble oppo = make_ensemble(3, 1, 8, 3, rng);
  const ExperienceDataset data = dataset_from_policies(
      game, forced_action_policy(1, 3, 0), forced_action_policy(1, 3, 1), 10, 7);
  const ExperienceDataset data_copy = data;

  std::vector<Vec> ego_before, oppo_before;
  for (const PolicyParams& p : ego.members) ego_before.push_back(net_flatten(p.net));
  for (const PolicyParams& p : oppo.members) oppo_before.push_back(net_flatten(p.net));

  RngStream mrng(12);
  OpponentModel model = make_opponent_model(1, 8, 3, mrng);
  PPOConfig ppo_cfg;
  ppo_cfg.batch_size = 128;
  AdaptConfig adapt_cfg;
  opponent_model_step(game, model, ego, oppo, data, adapt_cfg, ppo_cfg, 99);

  for (std::size_t i = 0; i < ego.members.size(); ++i)
    CHECK(net_flatten(ego.members[i].net) == ego_before[i]);
  for (std::size_t i = 0; i < oppo.members.size(); ++i)
    CHECK(net_flatten(oppo.members[i].net) == oppo_before[i]);
  CHECK(datasets_equal(data, data_copy));
}

TEST_CASE("with lambda1 = lambda2 = 0 the update is a pure gail step") {
  const MatrixGame game = MatrixGame::rps();
  RngStream rng(13);
  const PolicyEnsemble ego = make_ensemble(2, 1, 8, 3, rng);
  const PolicyEnsemble oppo = make_ensemble(2, 1, 8, 3, rng);
  const ExperienceDataset data_a = dataset_from_policies(
      game, forced_action_policy(1, 3, 0), forced_action_policy(1, 3, 1), 10, 8);
  const ExperienceDataset data_b = dataset_from_policies(
      game, forced_action_policy(1, 3, 2), forced_action_policy(1, 3, 0), 10, 9);

  AdaptConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  PPOConfig ppo_cfg;
  ppo_cfg.batch_size = 96;

  RngStream m1(14), m2(14);
  OpponentModel model_a = make_opponent_model(1, 8, 3, m1);
  OpponentModel model_b = make_opponent_model(1, 8, 3, m2);
  // identical updates regardless of the (unused) dataset contents
  opponent_model_step(game, model_a, ego, oppo, data_a, cfg, ppo_cfg, 42);
  opponent_model_step(game, model_b, ego, oppo, data_b, cfg, ppo_cfg, 42);
  CHECK(net_equal(model_a.policy.net, model_b.policy.net));
  CHECK(net_equal(model_a.disc.net, model_b.disc.net));
}

TEST_CASE("gail-only adaptation imitates the opponent ensemble mixture") {
  const MatrixGame game = MatrixGame::rps();
  RngStream rng(15);
  const PolicyEnsemble ego = make_ensemble(2, 1, 8, 3, rng);
  // a deliberately non-uniform opponent ensemble to imitate
  PolicyEnsemble oppo;
  PolicyParams skew = forced_action_policy(1, 3, 0);
  skew.net.b3 << 1.2, 0.3, -0.5;
  oppo.members.push_back(skew);
  PolicyParams skew2 = skew;
  skew2.net.b3 << -0.2, 0.9, 0.1;
  oppo.members.push_back(skew2);

  ExperienceDataset dummy = dataset_from_policies(
      game, forced_action_policy(1, 3, 0), forced_action_policy(1, 3, 1), 5, 10);

  AdaptConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  cfg.disc_learning_rate = 0.05;
  cfg.disc_updates_per_iter = 10;
  PPOConfig ppo_cfg;
  ppo_cfg.batch_size = 256;
  ppo_cfg.learning_rate = 0.0005;

  RngStream mrng(16);
  OpponentModel model = make_opponent_model(1, 8, 3, mrng);
  for (int k = 0; k < 600; ++k)
    opponent_model_step(game, model, ego, oppo, dummy, cfg, ppo_cfg,
                        derive_seed(17, "gail", static_cast<std::uint64_t>(k)));

  const Vec mixture = mixture_probs(oppo, Vec::Ones(1));
  const Vec model_probs = action_probs(model.policy, Vec::Ones(1));
  CHECK(test::tv_distance(model_probs, mixture) < 0.1);
}

TEST_CASE("large bc weight pins the model to the exploiter on dataset states") {
  const MatrixGame game = MatrixGame::rps();
  RngStream rng(18);
  const PolicyEnsemble ego = make_ensemble(2, 1, 8, 3, rng);
  const PolicyEnsemble oppo = make_ensemble(2, 1, 8, 3, rng);
  // deterministic exploiter always plays paper
  const PolicyParams exploiter = forced_action_policy(1, 3, 1);
  const ExperienceDataset data = dataset_from_policies(
      game, forced_action_policy(1, 3, 0), exploiter, 10, 19);

  AdaptConfig cfg;
  cfg.lambda1 = 5.0;
  cfg.lambda2 = 0.0;
  PPOConfig ppo_cfg;
  ppo_cfg.batch_size = 128;
  OpponentModelTerms terms;
  terms.use_rl = false;

  RngStream mrng(20);
  OpponentModel model = make_opponent_model(1, 8, 3, mrng);
  for (int k = 0; k < 400; ++k)
    opponent_model_step(game, model, ego, oppo, data, cfg, ppo_cfg,
                        derive_seed(21, "bc", static_cast<std::uint64_t>(k)),
                        terms);

  Vec exploiter_probs = action_probs(exploiter, Vec::Ones(1));
  const Vec model_probs = action_probs(model.policy, Vec::Ones(1));
  CHECK(test::tv_distance(model_probs, exploiter_probs) < 0.1);
}
