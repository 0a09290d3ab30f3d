#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "safeadapt/ppo.hpp"
#include "test_util.hpp"

using namespace safeadapt;

namespace {

// Matrix game where the middle row always pays +1 and the others -1; the
// optimal policy is pure action 1 regardless of the opponent.
MatrixGame bandit_game() {
  Mat payoff(3, 3);
  payoff << -1, -1, -1,
             1,  1,  1,
            -1, -1, -1;
  return MatrixGame("bandit", payoff);
}

PolicyParams uniform_policy(int obs_dim, int actions) {
  RngStream rng(0);
  PolicyParams p = make_policy(obs_dim, 4, actions, rng);
  p.net = zeros_like(p.net);
  return p;
}

// Clipped-surrogate loss exactly as ppo_update defines it; the finite
// difference oracle below differentiates this independent implementation.
double surrogate_loss(const PolicyParams& policy, const RolloutBatch& batch,
                      double clip_epsilon) {
  double loss = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const double lp = log_prob(policy, batch.obs.col(i),
                               batch.actions[static_cast<std::size_t>(i)]);
    const double ratio = std::exp(lp - batch.behavior_log_probs[i]);
    const double clipped =
        std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    loss -= std::min(ratio * batch.advantages[i], clipped * batch.advantages[i]) /
            batch.size();
  }
  return loss;
}

}  // namespace

TEST_CASE("config validation") {
  PPOConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.clip_epsilon = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PPOConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("collect_batch gathers whole episodes with at least batch_size steps") {
  const GridDuel game;
  PPOConfig cfg;
  cfg.batch_size = 200;
  const PolicyParams actor = uniform_policy(51, 5);
  const PolicyParams oppo = uniform_policy(51, 5);
  const RolloutBatch batch = collect_batch(game, Seat::ego, fixed_policy(actor),
                                           fixed_policy(oppo), cfg, 42);
  CHECK(batch.size() >= 200);
  CHECK(batch.dones.back() == 1);

  const RolloutBatch again = collect_batch(
      game, Seat::ego, fixed_policy(actor), fixed_policy(oppo), cfg, 42);
  CHECK(batch.obs == again.obs);
  CHECK(batch.rewards == again.rewards);
  CHECK(batch.behavior_log_probs == again.behavior_log_probs);
}

TEST_CASE("reward override replaces every reward") {
  const MatrixGame game = MatrixGame::rps();
  PPOConfig cfg;
  cfg.batch_size = 50;
  const PolicyParams actor = uniform_policy(1, 3);
  const RolloutBatch batch = collect_batch(
      game, Seat::ego, fixed_policy(actor), fixed_policy(actor), cfg, 1,
      [](const Transition&) { return 0.0; });
  CHECK(batch.rewards.cwiseAbs().maxCoeff() == 0.0);
  // one-shot episodes: 50 steps = 50 episodes
  CHECK(batch.size() == 50);
}

TEST_CASE("opponent seat batches negate the ego reward") {
  const MatrixGame game = MatrixGame::rps();
  PPOConfig cfg;
  cfg.batch_size = 30;
  const PolicyParams rock = [] {
    PolicyParams p = uniform_policy(1, 3);
    p.net.b3 << 10.0, 0.0, 0.0;
    return p;
  }();
  const PolicyParams scissors = [] {
    PolicyParams p = uniform_policy(1, 3);
    p.net.b3 << 0.0, 0.0, 10.0;
    return p;
  }();
  // ego plays rock, opponent plays scissors: ego reward +1, opponent -1
  const RolloutBatch batch = collect_batch(
      game, Seat::oppo, fixed_policy(scissors), fixed_policy(rock), cfg, 9);
  CHECK(batch.rewards.maxCoeff() == -1.0);
}

TEST_CASE("behavior log-probs reproduce the collection-time ratio of one") {
  const GridDuel game;
  PPOConfig cfg;
  cfg.batch_size = 100;
  RngStream rng(3);
  const PolicyParams actor = make_policy(51, 8, 5, rng);
  const PolicyParams oppo = uniform_policy(51, 5);
  const RolloutBatch batch = collect_batch(game, Seat::ego, fixed_policy(actor),
                                           fixed_policy(oppo), cfg, 5);
  for (int i = 0; i < batch.size(); ++i) {
    const double lp = log_prob(actor, batch.obs.col(i),
                               batch.actions[static_cast<std::size_t>(i)]);
    CHECK(std::exp(lp - batch.behavior_log_probs[i]) == 1.0);
  }
}

TEST_CASE("gae: zero rewards and zero values give zero advantages") {
  const MatrixGame game = MatrixGame::rps(4);
  PPOConfig cfg;
  cfg.batch_size = 40;
  const PolicyParams actor = uniform_policy(1, 3);
  RolloutBatch batch = collect_batch(game, Seat::ego, fixed_policy(actor),
                                     fixed_policy(actor), cfg, 2,
                                     [](const Transition&) { return 0.0; });
  RngStream vrng(1);
  ValueParams v = make_value(1, 4, vrng);
  v.net = zeros_like(v.net);
  compute_advantages(batch, v, 1.0, 0.95);
  CHECK(batch.advantages.cwiseAbs().maxCoeff() == 0.0);
  CHECK(batch.value_targets.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gae: single transition with r=1, V=0, gamma=lambda=1") {
  RolloutBatch batch;
  batch.obs = Mat::Ones(1, 1);
  batch.actions = {0};
  batch.behavior_log_probs = Vec::Zero(1);
  batch.rewards = Vec::Ones(1);
  batch.dones = {1};
  RngStream rng(0);
  ValueParams v = make_value(1, 4, rng);
  v.net = zeros_like(v.net);
  compute_advantages(batch, v, 1.0, 1.0);
  // raw advantage 1 shows up in the value target; normalization recenters
  CHECK(batch.value_targets[0] == 1.0);
  CHECK(batch.advantages[0] == 0.0);
}

TEST_CASE("gae matches the backward recursion on a 3-step episode") {
  RngStream rng(31);
  ValueParams v = make_value(2, 6, rng);
  RolloutBatch batch;
  batch.obs = Mat::Random(2, 3);
  batch.actions = {0, 1, 0};
  batch.behavior_log_probs = Vec::Zero(3);
  batch.rewards.resize(3);
  batch.rewards << 1.0, -0.5, 2.0;
  batch.dones = {0, 0, 1};
  const double gamma = 0.9, lambda = 0.8;
  compute_advantages(batch, v, gamma, lambda);

  // independent recursion with the same value predictions
  Vec values(3);
  for (int i = 0; i < 3; ++i) values[i] = value_of(v, batch.obs.col(i));
  Vec delta(3);
  delta[2] = batch.rewards[2] - values[2];
  delta[1] = batch.rewards[1] + gamma * values[2] - values[1];
  delta[0] = batch.rewards[0] + gamma * values[1] - values[0];
  Vec raw(3);
  raw[2] = delta[2];
  raw[1] = delta[1] + gamma * lambda * raw[2];
  raw[0] = delta[0] + gamma * lambda * raw[1];
  const double mean = raw.mean();
  const double sd =
      std::max(std::sqrt((raw.array() - mean).square().sum() / 3.0), 1e-8);

  for (int i = 0; i < 3; ++i) {
    CHECK(batch.value_targets[i] == doctest::Approx(raw[i] + values[i]).epsilon(1e-12));
    CHECK(batch.advantages[i] ==
          doctest::Approx((raw[i] - mean) / sd).epsilon(1e-12));
  }
}

TEST_CASE("gae resets across episode boundaries") {
  RngStream rng(77);
  ValueParams v = make_value(1, 4, rng);
  RolloutBatch batch;
  batch.obs = Mat::Ones(1, 4);
  batch.actions = {0, 0, 0, 0};
  batch.behavior_log_probs = Vec::Zero(4);
  batch.rewards.resize(4);
  batch.rewards << 1.0, 0.0, 5.0, 0.0;
  batch.dones = {0, 1, 0, 1};
  compute_advantages(batch, v, 0.9, 0.9);
  const double value = value_of(v, Vec::Ones(1));
  // the second episode's large reward must not leak into the first
  const double d1 = 1.0 + 0.9 * value - value;
  const double d2 = 0.0 - value;
  const double raw0 = d1 + 0.81 * d2;
  CHECK(batch.value_targets[0] == doctest::Approx(raw0 + value).epsilon(1e-9));
}

TEST_CASE("zero advantages leave the policy parameters bit-identical") {
  const MatrixGame game = MatrixGame::rps();
  PPOConfig cfg;
  cfg.batch_size = 64;
  cfg.minibatch_size = 32;
  RngStream prng(5);
  PolicyParams policy = make_policy(1, 4, 3, prng);
  const PolicyParams before = policy;
  ValueParams v = make_value(1, 4, prng);
  v.net = zeros_like(v.net);
  RolloutBatch batch = collect_batch(game, Seat::ego, fixed_policy(policy),
                                     fixed_policy(policy), cfg, 8,
                                     [](const Transition&) { return 0.0; });
  compute_advantages(batch, v, 1.0, 0.95);
  RngStream urng(6);
  ppo_update(policy, v, batch, cfg, urng);
  CHECK(net_equal(policy.net, before.net));
}

TEST_CASE("clipped-surrogate gradient matches finite differences") {
  // 5-transition batch with behavior log-probs from a different policy so the
  // ratios sit away from one.
  RngStream rng(41);
  PolicyParams behavior = make_policy(3, 5, 3, rng);
  RolloutBatch batch;
  batch.obs = Mat::Random(3, 5);
  batch.actions = {0, 2, 1, 0, 1};
  batch.behavior_log_probs.resize(5);
  batch.advantages.resize(5);
  batch.advantages << 1.2, -0.7, 0.4, -1.5, 0.9;
  batch.value_targets = Vec::Zero(5);
  batch.rewards = Vec::Zero(5);
  batch.dones = {0, 0, 0, 0, 1};
  for (int i = 0; i < 5; ++i)
    batch.behavior_log_probs[i] =
        log_prob(behavior, batch.obs.col(i),
                 batch.actions[static_cast<std::size_t>(i)]);

  for (int point = 0; point < 10; ++point) {
    RngStream prng(500 + static_cast<std::uint64_t>(point));
    PolicyParams policy = make_policy(3, 5, 3, prng);
    ValueParams v = make_value(3, 5, prng);
    test::randomize(policy.net, prng);
    test::randomize(v.net, prng);

    // one full-batch step at lr 1 recovers the analytic gradient exactly
    PPOConfig cfg;
    cfg.batch_size = 5;
    cfg.minibatch_size = 5;
    cfg.epochs_per_batch = 1;
    cfg.learning_rate = 1.0;
    PolicyParams stepped = policy;
    ValueParams v_stepped = v;
    RngStream urng(1);
    ppo_update(stepped, v_stepped, batch, cfg, urng);
    const Vec analytic = net_flatten(policy.net) - net_flatten(stepped.net);

    const Vec fd = test::fd_gradient(policy.net, [&] {
      return surrogate_loss(policy, batch, cfg.clip_epsilon);
    });
    CHECK(test::relative_error(analytic, fd) < 1e-3);
  }
}

TEST_CASE("value-regression gradient matches finite differences") {
  RolloutBatch batch;
  batch.obs = Mat::Random(3, 6);
  batch.actions = {0, 1, 2, 0, 1, 2};
  batch.behavior_log_probs = Vec::Zero(6);
  batch.advantages = Vec::Zero(6);  // silence the policy side
  batch.value_targets.resize(6);
  batch.value_targets << 0.4, -1.0, 2.0, 0.0, 1.5, -0.3;
  batch.rewards = Vec::Zero(6);
  batch.dones = {0, 0, 0, 0, 0, 1};

  for (int point = 0; point < 10; ++point) {
    RngStream prng(900 + static_cast<std::uint64_t>(point));
    PolicyParams policy = make_policy(3, 5, 3, prng);
    ValueParams v = make_value(3, 5, prng);
    test::randomize(policy.net, prng);
    test::randomize(v.net, prng);

    PPOConfig cfg;
    cfg.batch_size = 6;
    cfg.minibatch_size = 6;
    cfg.epochs_per_batch = 1;
    cfg.learning_rate = 1.0;
    PolicyParams p_stepped = policy;
    ValueParams v_stepped = v;
    RngStream urng(1);
    ppo_update(p_stepped, v_stepped, batch, cfg, urng);
    const Vec analytic = net_flatten(v.net) - net_flatten(v_stepped.net);

    const Vec fd = test::fd_gradient(v.net, [&] {
      double loss = 0.0;
      for (int i = 0; i < batch.size(); ++i) {
        const double resid = value_of(v, batch.obs.col(i)) - batch.value_targets[i];
        loss += cfg.value_loss_coef * 0.5 * resid * resid / batch.size();
      }
      return loss;
    });
    CHECK(test::relative_error(analytic, fd) < 1e-3);
  }
}

TEST_CASE("per-sample clipped surrogate never exceeds the unclipped value") {
  RngStream rng(61);
  const PolicyParams behavior = make_policy(2, 4, 3, rng);
  const PolicyParams current = make_policy(2, 4, 3, rng);
  for (int i = 0; i < 200; ++i) {
    Vec obs(2);
    obs << rng.uniform_symmetric(1.0), rng.uniform_symmetric(1.0);
    const int action = rng.uniform_int(3);
    const double adv = rng.uniform_symmetric(2.0);
    const double ratio = std::exp(log_prob(current, obs, action) -
                                  log_prob(behavior, obs, action));
    const double clipped = std::clamp(ratio, 0.8, 1.2);
    CHECK(std::min(ratio * adv, clipped * adv) <= ratio * adv);
  }
}

TEST_CASE("non-finite advantages are rejected with a diagnostic") {
  RolloutBatch batch;
  batch.obs = Mat::Ones(1, 2);
  batch.actions = {0, 1};
  batch.behavior_log_probs = Vec::Zero(2);
  batch.advantages.resize(2);
  batch.advantages << std::numeric_limits<double>::quiet_NaN(), 1.0;
  batch.value_targets = Vec::Zero(2);
  batch.rewards = Vec::Zero(2);
  batch.dones = {0, 1};
  RngStream prng(3);
  PolicyParams policy = make_policy(1, 4, 3, prng);
  ValueParams v = make_value(1, 4, prng);
  PPOConfig cfg;
  cfg.minibatch_size = 2;
  RngStream urng(1);
  CHECK_THROWS_AS(ppo_update(policy, v, batch, cfg, urng), std::runtime_error);
}

TEST_CASE("ppo learns the rewarding bandit action") {
  const MatrixGame game = bandit_game();
  PPOConfig cfg;
  cfg.batch_size = 128;
  cfg.minibatch_size = 64;
  RngStream init(9);
  PolicyParams policy = make_policy(1, 8, 3, init);
  ValueParams v = make_value(1, 8, init);
  const PolicyParams oppo = uniform_policy(1, 3);

  std::vector<double> checkpoint_returns;
  for (int k = 0; k < 200; ++k) {
    RolloutBatch batch = collect_batch(
        game, Seat::ego, fixed_policy(policy), fixed_policy(oppo), cfg,
        derive_seed(1000, "bandit", static_cast<std::uint64_t>(k)));
    if (k % 20 == 0) checkpoint_returns.push_back(batch.rewards.mean());
    compute_advantages(batch, v, 1.0, cfg.gae_lambda);
    RngStream urng(derive_seed(2000, "bandit_update",
                               static_cast<std::uint64_t>(k)));
    ppo_update(policy, v, batch, cfg, urng);
  }
  const Vec probs = action_probs(policy, Vec::Ones(1));
  CHECK(probs[1] > 0.95);

  // improvement smoke test: late checkpoints beat early ones
  REQUIRE(checkpoint_returns.size() == 10);
  const double early = (checkpoint_returns[0] + checkpoint_returns[1] +
                        checkpoint_returns[2]) / 3.0;
  const double late = (checkpoint_returns[7] + checkpoint_returns[8] +
                       checkpoint_returns[9]) / 3.0;
  CHECK(late > early);
}
