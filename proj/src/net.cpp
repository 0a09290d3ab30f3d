#include "safeadapt/net.hpp"

#include <cmath>
#include <stdexcept>

namespace safeadapt {

namespace {

void fill_uniform(Mat& w, RngStream& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(w.cols()));
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      w(r, c) = rng.uniform_symmetric(s);
}

void check_input(const NetworkParams& p, Eigen::Index dim, const char* what) {
  if (dim != p.input_dim())
    throw std::invalid_argument(std::string(what) + ": input dimension " +
                                std::to_string(dim) + " does not match net (" +
                                std::to_string(p.input_dim()) + ")");
}

}  // namespace

NetworkParams make_network(int input_dim, int hidden_dim, int output_dim,
                           RngStream& rng) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1)
    throw std::invalid_argument("make_network: dimensions must be positive");
  NetworkParams p;
  p.w1.resize(hidden_dim, input_dim);
  p.w2.resize(hidden_dim, hidden_dim);
  p.w3.resize(output_dim, hidden_dim);
  fill_uniform(p.w1, rng);
  fill_uniform(p.w2, rng);
  fill_uniform(p.w3, rng);
  p.b1 = Vec::Zero(hidden_dim);
  p.b2 = Vec::Zero(hidden_dim);
  p.b3 = Vec::Zero(output_dim);
  return p;
}

NetworkParams zeros_like(const NetworkParams& p) {
  NetworkParams z;
  z.w1 = Mat::Zero(p.w1.rows(), p.w1.cols());
  z.w2 = Mat::Zero(p.w2.rows(), p.w2.cols());
  z.w3 = Mat::Zero(p.w3.rows(), p.w3.cols());
  z.b1 = Vec::Zero(p.b1.size());
  z.b2 = Vec::Zero(p.b2.size());
  z.b3 = Vec::Zero(p.b3.size());
  return z;
}

Vec net_forward(const NetworkParams& p, const Vec& x) {
  check_input(p, x.size(), "net_forward");
  Vec h1 = ((p.w1 * x + p.b1).array().max(0.0)).matrix();
  Vec h2 = ((p.w2 * h1 + p.b2).array().max(0.0)).matrix();
  return p.w3 * h2 + p.b3;
}

Mat net_forward_batch(const NetworkParams& p, const Mat& x) {
  check_input(p, x.rows(), "net_forward_batch");
  Mat h1 = ((p.w1 * x).colwise() + p.b1).array().max(0.0);
  Mat h2 = ((p.w2 * h1).colwise() + p.b2).array().max(0.0);
  return (p.w3 * h2).colwise() + p.b3;
}

NetActivations net_forward_cached(const NetworkParams& p, const Mat& x) {
  check_input(p, x.rows(), "net_forward_cached");
  NetActivations a;
  a.x = x;
  a.z1 = (p.w1 * x).colwise() + p.b1;
  a.h1 = a.z1.array().max(0.0);
  a.z2 = (p.w2 * a.h1).colwise() + p.b2;
  a.h2 = a.z2.array().max(0.0);
  a.y = (p.w3 * a.h2).colwise() + p.b3;
  return a;
}

NetworkParams net_backward(const NetworkParams& p, const NetActivations& act,
                           const Mat& upstream) {
  NetworkParams g;
  g.w3 = upstream * act.h2.transpose();
  g.b3 = upstream.rowwise().sum();
  Mat gh2 = p.w3.transpose() * upstream;
  Mat gz2 = (act.z2.array() > 0.0).cast<double>() * gh2.array();
  g.w2 = gz2 * act.h1.transpose();
  g.b2 = gz2.rowwise().sum();
  Mat gh1 = p.w2.transpose() * gz2;
  Mat gz1 = (act.z1.array() > 0.0).cast<double>() * gh1.array();
  g.w1 = gz1 * act.x.transpose();
  g.b1 = gz1.rowwise().sum();
  return g;
}

void net_axpy(NetworkParams& dst, const NetworkParams& grad, double scale) {
  dst.w1 += scale * grad.w1;
  dst.w2 += scale * grad.w2;
  dst.w3 += scale * grad.w3;
  dst.b1 += scale * grad.b1;
  dst.b2 += scale * grad.b2;
  dst.b3 += scale * grad.b3;
}

int net_param_count(const NetworkParams& p) {
  return static_cast<int>(p.w1.size() + p.w2.size() + p.w3.size() +
                          p.b1.size() + p.b2.size() + p.b3.size());
}

Vec net_flatten(const NetworkParams& p) {
  Vec flat(net_param_count(p));
  Eigen::Index at = 0;
  auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = Eigen::Map<const Vec>(m.data(), m.size());
    at += m.size();
  };
  put(p.w1);
  put(p.b1);
  put(p.w2);
  put(p.b2);
  put(p.w3);
  put(p.b3);
  return flat;
}

void net_unflatten(NetworkParams& p, const Vec& flat) {
  if (flat.size() != net_param_count(p))
    throw std::invalid_argument("net_unflatten: size mismatch");
  Eigen::Index at = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Vec>(m.data(), m.size()) = flat.segment(at, m.size());
    at += m.size();
  };
  take(p.w1);
  take(p.b1);
  take(p.w2);
  take(p.b2);
  take(p.w3);
  take(p.b3);
}

bool net_finite(const NetworkParams& p) {
  return p.w1.allFinite() && p.w2.allFinite() && p.w3.allFinite() &&
         p.b1.allFinite() && p.b2.allFinite() && p.b3.allFinite();
}

bool net_equal(const NetworkParams& a, const NetworkParams& b) {
  return a.w1 == b.w1 && a.w2 == b.w2 && a.w3 == b.w3 && a.b1 == b.b1 &&
         a.b2 == b.b2 && a.b3 == b.b3;
}

PolicyParams make_policy(int obs_dim, int hidden_dim, int num_actions,
                         RngStream& rng) {
  return PolicyParams{make_network(obs_dim, hidden_dim, num_actions, rng)};
}

ValueParams make_value(int obs_dim, int hidden_dim, RngStream& rng) {
  return ValueParams{make_network(obs_dim, hidden_dim, 1, rng)};
}

Discriminator make_discriminator(int obs_dim, int num_actions, int hidden_dim,
                                 RngStream& rng) {
  return Discriminator{make_network(obs_dim + num_actions, hidden_dim, 1, rng),
                       num_actions};
}

double log_sum_exp(const Vec& logits) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}

Vec softmax(const Vec& logits) {
  Vec shifted = (logits.array() - logits.maxCoeff()).exp();
  return shifted / shifted.sum();
}

Vec action_probs(const PolicyParams& policy, const Vec& obs) {
  return softmax(net_forward(policy.net, obs));
}

Mat action_probs_batch(const PolicyParams& policy, const Mat& obs) {
  Mat logits = net_forward_batch(policy.net, obs);
  Mat shifted =
      (logits.rowwise() - logits.colwise().maxCoeff()).array().exp();
  Eigen::RowVectorXd sums = shifted.colwise().sum();
  return shifted.array().rowwise() / sums.array();
}

double log_prob(const PolicyParams& policy, const Vec& obs, int action) {
  Vec logits = net_forward(policy.net, obs);
  if (action < 0 || action >= logits.size())
    throw std::invalid_argument("log_prob: action out of range");
  return logits[action] - log_sum_exp(logits);
}

std::pair<double, NetworkParams> log_prob_grad(const PolicyParams& policy,
                                               const Vec& obs, int action) {
  NetActivations act = net_forward_cached(policy.net, obs);
  Vec logits = act.y.col(0);
  if (action < 0 || action >= logits.size())
    throw std::invalid_argument("log_prob_grad: action out of range");
  const double lp = logits[action] - log_sum_exp(logits);
  // d log pi(a|o) / d logits = e_a - softmax(logits)
  Vec up = -softmax(logits);
  up[action] += 1.0;
  return {lp, net_backward(policy.net, act, up)};
}

double value_of(const ValueParams& v, const Vec& obs) {
  return net_forward(v.net, obs)[0];
}

Vec value_batch(const ValueParams& v, const Mat& obs) {
  return net_forward_batch(v.net, obs).row(0).transpose();
}

Vec disc_input(const Vec& obs, int action, int num_actions) {
  if (action < 0 || action >= num_actions)
    throw std::invalid_argument("disc_input: action out of range");
  Vec x = Vec::Zero(obs.size() + num_actions);
  x.head(obs.size()) = obs;
  x[obs.size() + action] = 1.0;
  return x;
}

double disc_logit(const Discriminator& d, const Vec& obs, int action) {
  return net_forward(d.net, disc_input(obs, action, d.num_actions))[0];
}

double disc_forward(const Discriminator& d, const Vec& obs, int action) {
  const double p = 1.0 / (1.0 + std::exp(-disc_logit(d, obs, action)));
  return std::min(1.0 - kDiscClamp, std::max(kDiscClamp, p));
}

PolicyEnsemble make_ensemble(int n, int obs_dim, int hidden_dim,
                             int num_actions, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("make_ensemble: need N >= 1 members");
  PolicyEnsemble e;
  e.members.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    e.members.push_back(make_policy(obs_dim, hidden_dim, num_actions, rng));
  return e;
}

int ensemble_sample(const PolicyEnsemble& ensemble, RngStream& rng) {
  if (ensemble.size() < 1)
    throw std::invalid_argument("ensemble_sample: empty ensemble");
  return rng.uniform_int(ensemble.size());
}

int ensemble_sample(const PolicyEnsemble& ensemble, std::uint64_t seed) {
  RngStream rng(seed);
  return ensemble_sample(ensemble, rng);
}

Vec mixture_probs(const PolicyEnsemble& ensemble, const Vec& obs) {
  Vec probs = action_probs(ensemble.members[0], obs);
  for (int i = 1; i < ensemble.size(); ++i)
    probs += action_probs(ensemble.members[i], obs);
  return probs / ensemble.size();
}

}  // namespace safeadapt
