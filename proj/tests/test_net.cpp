#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "safeadapt/net.hpp"
#include "test_util.hpp"

using namespace safeadapt;

TEST_CASE("initialization is seeded, bounded and zero-biased") {
  RngStream a(5), b(5);
  const NetworkParams na = make_network(4, 8, 3, a);
  const NetworkParams nb = make_network(4, 8, 3, b);
  CHECK(net_equal(na, nb));
  CHECK(na.b1.isZero());
  CHECK(na.b3.isZero());
  CHECK(na.w1.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(4.0));
  CHECK(na.w2.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
  RngStream c(6);
  CHECK(!net_equal(na, make_network(4, 8, 3, c)));
}

TEST_CASE("flatten and unflatten round-trip") {
  RngStream rng(3);
  NetworkParams p = make_network(3, 5, 2, rng);
  const Vec flat = net_flatten(p);
  CHECK(flat.size() == net_param_count(p));
  NetworkParams q = zeros_like(p);
  net_unflatten(q, flat);
  CHECK(net_equal(p, q));
}

TEST_CASE("all-zero parameters give the uniform policy") {
  RngStream rng(1);
  PolicyParams policy = make_policy(4, 8, 3, rng);
  policy.net = zeros_like(policy.net);
  const Vec probs = action_probs(policy, Vec::Random(4));
  for (int a = 0; a < 3; ++a)
    CHECK(probs[a] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(log_prob(policy, Vec::Random(4), 1) ==
        doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("action probabilities are a valid distribution") {
  RngStream rng(17);
  const PolicyParams policy = make_policy(6, 16, 4, rng);
  for (int i = 0; i < 50; ++i) {
    const Vec probs = action_probs(policy, Vec::Random(6));
    CHECK(std::abs(probs.sum() - 1.0) <= 1e-9);
    CHECK(probs.minCoeff() > 0.0);
  }
}

TEST_CASE("forced logits (1,0,0) give the softmax example values") {
  RngStream rng(2);
  PolicyParams policy = make_policy(2, 4, 3, rng);
  policy.net = zeros_like(policy.net);
  policy.net.b3 << 1.0, 0.0, 0.0;
  const Vec probs = action_probs(policy, Vec::Zero(2));
  const double e = std::exp(1.0);
  CHECK(probs[0] == doctest::Approx(e / (e + 2.0)).epsilon(1e-12));
  CHECK(probs[1] == doctest::Approx(1.0 / (e + 2.0)).epsilon(1e-12));
  CHECK(probs[2] == doctest::Approx(1.0 / (e + 2.0)).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected") {
  RngStream rng(4);
  const PolicyParams policy = make_policy(4, 8, 3, rng);
  CHECK_THROWS_AS(action_probs(policy, Vec::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(log_prob(policy, Vec::Zero(4), 7), std::invalid_argument);
}

TEST_CASE("batched forward matches the single-sample path") {
  RngStream rng(11);
  const PolicyParams policy = make_policy(5, 8, 3, rng);
  Mat obs = Mat::Random(5, 7);
  const Mat batched = action_probs_batch(policy, obs);
  for (int i = 0; i < 7; ++i) {
    const Vec single = action_probs(policy, obs.col(i));
    CHECK((batched.col(i) - single).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("log-prob gradient matches central finite differences") {
  for (int point = 0; point < 10; ++point) {
    RngStream rng(100 + static_cast<std::uint64_t>(point));
    PolicyParams policy = make_policy(4, 6, 3, rng);
    test::randomize(policy.net, rng);
    Vec obs(4);
    for (int i = 0; i < 4; ++i) obs[i] = rng.uniform_symmetric(1.0);
    const int action = point % 3;
    const auto [lp, grad] = log_prob_grad(policy, obs, action);
    CHECK(lp == doctest::Approx(log_prob(policy, obs, action)).epsilon(1e-12));
    const Vec fd = test::fd_gradient(
        policy.net, [&] { return log_prob(policy, obs, action); });
    CHECK(test::relative_error(net_flatten(grad), fd) < 1e-3);
  }
}

TEST_CASE("expected log-prob gradient over actions vanishes") {
  RngStream rng(55);
  PolicyParams policy = make_policy(4, 6, 3, rng);
  Vec obs(4);
  for (int i = 0; i < 4; ++i) obs[i] = rng.uniform_symmetric(1.0);
  const Vec probs = action_probs(policy, obs);
  Vec total = Vec::Zero(net_param_count(policy.net));
  for (int a = 0; a < 3; ++a)
    total += probs[a] * net_flatten(log_prob_grad(policy, obs, a).second);
  CHECK(total.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("discriminator output is clamped into (0,1)") {
  RngStream rng(8);
  Discriminator d = make_discriminator(3, 4, 6, rng);
  d.net = zeros_like(d.net);
  CHECK(disc_forward(d, Vec::Zero(3), 0) == 0.5);
  d.net.b3 << 100.0;
  CHECK(disc_forward(d, Vec::Zero(3), 1) == 1.0 - kDiscClamp);
  d.net.b3 << -100.0;
  CHECK(disc_forward(d, Vec::Zero(3), 1) == kDiscClamp);
  RngStream rng2(9);
  const Discriminator random_d = make_discriminator(3, 4, 6, rng2);
  for (int i = 0; i < 20; ++i) {
    const double out = disc_forward(random_d, Vec::Random(3), i % 4);
    CHECK(out >= kDiscClamp);
    CHECK(out <= 1.0 - kDiscClamp);
  }
}

TEST_CASE("discriminator input is observation plus one-hot action") {
  const Vec obs = Vec::Ones(2);
  const Vec x = disc_input(obs, 1, 3);
  REQUIRE(x.size() == 5);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == 1.0);
  CHECK(x[2] == 0.0);
  CHECK(x[3] == 1.0);
  CHECK(x[4] == 0.0);
  CHECK_THROWS_AS(disc_input(obs, 3, 3), std::invalid_argument);
}

TEST_CASE("ensemble sampling is uniform and seed-stable") {
  RngStream rng(12);
  const PolicyEnsemble one = make_ensemble(1, 2, 4, 2, rng);
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(ensemble_sample(one, s) == 0);

  const PolicyEnsemble five = make_ensemble(5, 2, 4, 2, rng);
  CHECK(ensemble_sample(five, 77) == ensemble_sample(five, 77));
  std::array<int, 5> counts{};
  RngStream draw(13);
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    ++counts[static_cast<std::size_t>(ensemble_sample(five, draw))];
  for (int c : counts) {
    // binomial(1e5, 0.2): five sigma is ~0.0063, the spec allows 0.01
    CHECK(std::abs(c / double(n) - 0.2) < 0.01);
  }
}

TEST_CASE("mixture probabilities form a valid distribution") {
  RngStream rng(21);
  const PolicyEnsemble ensemble = make_ensemble(4, 3, 6, 5, rng);
  const Vec obs = Vec::Random(3);
  const Vec mix = mixture_probs(ensemble, obs);
  CHECK(std::abs(mix.sum() - 1.0) < 1e-9);
  CHECK(mix.minCoeff() > 0.0);
  Vec manual = Vec::Zero(5);
  for (const PolicyParams& member : ensemble.members)
    manual += action_probs(member, obs);
  manual /= 4.0;
  CHECK((mix - manual).cwiseAbs().maxCoeff() < 1e-12);
}
