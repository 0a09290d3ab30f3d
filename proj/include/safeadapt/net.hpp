#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "safeadapt/rng.hpp"

namespace safeadapt {

// Two-hidden-layer fully connected net with rectified-linear activations:
// input -> hidden -> hidden -> output. Gradients are hand-derived; the same
// struct doubles as the gradient container (identical shapes).
struct NetworkParams {
  Mat w1, w2, w3;
  Vec b1, b2, b3;

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int output_dim() const { return static_cast<int>(w3.rows()); }
};

// Weights uniform in [-s, s] with s = 1/sqrt(fan_in), biases zero. Entries
// are drawn row-major, layer by layer (w1, w2, w3), so a given stream seed
// pins the parameters exactly.
NetworkParams make_network(int input_dim, int hidden_dim, int output_dim,
                           RngStream& rng);
NetworkParams zeros_like(const NetworkParams& p);

Vec net_forward(const NetworkParams& p, const Vec& x);
Mat net_forward_batch(const NetworkParams& p, const Mat& x);  // columns = samples

// Cached batched forward pass for backprop.
struct NetActivations {
  Mat x, z1, h1, z2, h2, y;
};
NetActivations net_forward_cached(const NetworkParams& p, const Mat& x);

// Parameter gradient of sum_j L_j given upstream dL/dy (one column per
// sample). The caller owns any 1/batch scaling.
NetworkParams net_backward(const NetworkParams& p, const NetActivations& act,
                           const Mat& upstream);

void net_axpy(NetworkParams& dst, const NetworkParams& grad, double scale);
int net_param_count(const NetworkParams& p);
Vec net_flatten(const NetworkParams& p);
void net_unflatten(NetworkParams& p, const Vec& flat);
bool net_finite(const NetworkParams& p);
bool net_equal(const NetworkParams& a, const NetworkParams& b);

// Stochastic discrete-action policy: action probabilities are the softmax of
// the network outputs.
struct PolicyParams {
  NetworkParams net;
};

// State-value head (scalar output).
struct ValueParams {
  NetworkParams net;
};

// Observation-action classifier; the single output is squashed through a
// logistic to (0, 1) and clamped away from the endpoints by 1e-7.
struct Discriminator {
  NetworkParams net;
  int num_actions = 0;
};

inline constexpr double kDiscClamp = 1e-7;

PolicyParams make_policy(int obs_dim, int hidden_dim, int num_actions,
                         RngStream& rng);
ValueParams make_value(int obs_dim, int hidden_dim, RngStream& rng);
Discriminator make_discriminator(int obs_dim, int num_actions, int hidden_dim,
                                 RngStream& rng);

Vec softmax(const Vec& logits);
double log_sum_exp(const Vec& logits);

Vec action_probs(const PolicyParams& policy, const Vec& obs);
Mat action_probs_batch(const PolicyParams& policy, const Mat& obs);
double log_prob(const PolicyParams& policy, const Vec& obs, int action);
// log pi(a|o) and its gradient in the policy parameters.
std::pair<double, NetworkParams> log_prob_grad(const PolicyParams& policy,
                                               const Vec& obs, int action);

double value_of(const ValueParams& v, const Vec& obs);
Vec value_batch(const ValueParams& v, const Mat& obs);

Vec disc_input(const Vec& obs, int action, int num_actions);
double disc_logit(const Discriminator& d, const Vec& obs, int action);
double disc_forward(const Discriminator& d, const Vec& obs, int action);

// Uniform mixture of N policies sharing dimensions.
struct PolicyEnsemble {
  std::vector<PolicyParams> members;

  int size() const { return static_cast<int>(members.size()); }
};

PolicyEnsemble make_ensemble(int n, int obs_dim, int hidden_dim,
                             int num_actions, RngStream& rng);
int ensemble_sample(const PolicyEnsemble& ensemble, RngStream& rng);
int ensemble_sample(const PolicyEnsemble& ensemble, std::uint64_t seed);
// Probability-weighted (uniform) average of member action probabilities;
// itself a valid distribution.
Vec mixture_probs(const PolicyEnsemble& ensemble, const Vec& obs);

}  // namespace safeadapt
