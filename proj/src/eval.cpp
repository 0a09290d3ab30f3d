#include "safeadapt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace safeadapt {

namespace {

// Bland's-rule tableau simplex for: maximize 1'w subject to B w <= 1, w >= 0
// with B strictly positive (m x n). Returns the optimum and the duals.
struct SimplexResult {
  Vec w;      // primal solution (n)
  Vec duals;  // dual solution (m)
  double objective = 0.0;
};

SimplexResult simplex_bounded(const Mat& b_matrix) {
  const int m = static_cast<int>(b_matrix.rows());
  const int n = static_cast<int>(b_matrix.cols());
  const int cols = n + m + 1;  // original vars, slacks, rhs
  constexpr double kTol = 1e-11;

  Mat tab(m + 1, cols);
  tab.setZero();
  tab.block(0, 0, m, n) = b_matrix;
  tab.block(0, n, m, m) = Mat::Identity(m, m);
  tab.col(cols - 1).head(m) = Vec::Ones(m);
  tab.row(m).head(n) = Eigen::RowVectorXd::Constant(n, -1.0);

  std::vector<int> basis(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  const int max_iters = 2000 * (m + n);
  for (int iter = 0; iter < max_iters; ++iter) {
    int enter = -1;
    for (int j = 0; j < n + m; ++j)
      if (tab(m, j) < -kTol) {
        enter = j;
        break;
      }
    if (enter < 0) break;

    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      const double a = tab(i, enter);
      if (a > kTol) {
        const double ratio = tab(i, cols - 1) / a;
        if (leave < 0 || ratio < best_ratio - kTol ||
            (std::abs(ratio - best_ratio) <= kTol &&
             basis[static_cast<std::size_t>(i)] <
                 basis[static_cast<std::size_t>(leave)])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0)
      throw std::runtime_error("solve_matrix_game: unbounded tableau");

    tab.row(leave) /= tab(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double factor = tab(i, enter);
      if (factor != 0.0) tab.row(i) -= factor * tab.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  SimplexResult out;
  out.w = Vec::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] < n)
      out.w[basis[static_cast<std::size_t>(i)]] = tab(i, cols - 1);
  out.duals = tab.row(m).segment(n, m).transpose();
  out.objective = tab(m, cols - 1);
  return out;
}

Vec cleanup_distribution(Vec v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::max(v[i], 0.0);
  const double sum = v.sum();
  if (sum <= 0.0)
    throw std::runtime_error("solve_matrix_game: degenerate strategy");
  return v / sum;
}

}  // namespace

MatrixGameSolution solve_matrix_game(const Mat& payoff) {
  if (payoff.rows() < 1 || payoff.cols() < 1)
    throw std::invalid_argument("solve_matrix_game: empty payoff matrix");
  const double shift = 1.0 + payoff.cwiseAbs().maxCoeff();
  const Mat shifted = payoff.array() + shift;

  const SimplexResult res = simplex_bounded(shifted);
  if (res.objective <= 0.0)
    throw std::runtime_error("solve_matrix_game: simplex failed");
  const double shifted_value = 1.0 / res.objective;

  MatrixGameSolution sol;
  sol.value = shifted_value - shift;
  sol.col_strategy = cleanup_distribution(res.w * shifted_value);
  sol.row_strategy = cleanup_distribution(res.duals * shifted_value);
  return sol;
}

StatePolicy policy_fn(const PolicyParams& policy) {
  return [&policy](const Vec& obs) { return action_probs(policy, obs); };
}

StatePolicy mixture_fn(const PolicyEnsemble& ensemble) {
  return [&ensemble](const Vec& obs) { return mixture_probs(ensemble, obs); };
}

namespace {

State initial_state_of(const Game& game) {
  RngStream rng(0);
  return game.initial_state(rng);
}

}  // namespace

double best_response_value(const Game& game, const StatePolicy& fixed_policy,
                           Seat fixed_seat) {
  const std::vector<State> positions = enumerate_joint_states(game);
  const GameSpec& spec = game.spec();
  const int n_free =
      fixed_seat == Seat::ego ? spec.actions_oppo : spec.actions_ego;
  const int n_fixed =
      fixed_seat == Seat::ego ? spec.actions_ego : spec.actions_oppo;

  Vec v_next = Vec::Zero(game.num_state_keys());
  Vec v_cur = Vec::Zero(game.num_state_keys());
  for (int t = spec.horizon - 1; t >= 0; --t) {
    for (const State& pos : positions) {
      const int key = game.state_key(pos);
      if (game.terminal_position(pos)) {
        v_cur[key] = 0.0;
        continue;
      }
      State st = pos;
      st.step = t;
      st.done = false;
      const Vec obs = fixed_seat == Seat::ego ? game.observe_ego(st)
                                              : game.observe_oppo(st);
      const Vec probs = fixed_policy(obs);
      if (probs.size() != n_fixed)
        throw std::invalid_argument(
            "best_response_value: fixed policy has wrong action count");
      double best = -std::numeric_limits<double>::infinity();
      for (int a_free = 0; a_free < n_free; ++a_free) {
        double q = 0.0;
        for (int a_fixed = 0; a_fixed < n_fixed; ++a_fixed) {
          const double p = probs[a_fixed];
          if (p == 0.0) continue;
          const int a_ego = fixed_seat == Seat::ego ? a_fixed : a_free;
          const int a_oppo = fixed_seat == Seat::ego ? a_free : a_fixed;
          const StepResult r = game.step(st, a_ego, a_oppo);
          const double reward_free =
              fixed_seat == Seat::ego ? -r.reward_ego : r.reward_ego;
          const double cont =
              r.done ? 0.0 : v_next[game.state_key(r.next)];
          q += p * (reward_free + spec.discount * cont);
        }
        best = std::max(best, q);
      }
      v_cur[key] = best;
    }
    std::swap(v_cur, v_next);
  }
  return v_next[game.state_key(initial_state_of(game))];
}

double game_value(const Game& game) {
  const std::vector<State> positions = enumerate_joint_states(game);
  const GameSpec& spec = game.spec();

  Vec v_next = Vec::Zero(game.num_state_keys());
  Vec v_cur = Vec::Zero(game.num_state_keys());
  Mat stage(spec.actions_ego, spec.actions_oppo);
  for (int t = spec.horizon - 1; t >= 0; --t) {
    for (const State& pos : positions) {
      const int key = game.state_key(pos);
      if (game.terminal_position(pos)) {
        v_cur[key] = 0.0;
        continue;
      }
      State st = pos;
      st.step = t;
      st.done = false;
      for (int a_ego = 0; a_ego < spec.actions_ego; ++a_ego)
        for (int a_oppo = 0; a_oppo < spec.actions_oppo; ++a_oppo) {
          const StepResult r = game.step(st, a_ego, a_oppo);
          const double cont = r.done ? 0.0 : v_next[game.state_key(r.next)];
          stage(a_ego, a_oppo) = r.reward_ego + spec.discount * cont;
        }
      v_cur[key] = solve_matrix_game(stage).value;
    }
    std::swap(v_cur, v_next);
  }
  return v_next[game.state_key(initial_state_of(game))];
}

double exploitability(const Game& game, const StatePolicy& policy,
                      Seat policy_seat, double precomputed_game_value) {
  const double br =
      best_response_value(game, policy, policy_seat);
  // The exploiting side's equilibrium value is +-game_value depending on seat.
  const double exploiter_value = policy_seat == Seat::ego
                                     ? -precomputed_game_value
                                     : precomputed_game_value;
  return br - exploiter_value;
}

double exploitability(const Game& game, const StatePolicy& policy,
                      Seat policy_seat) {
  return exploitability(game, policy, policy_seat, game_value(game));
}

double estimate_reward(const Game& game, const PolicyEnsemble& ego,
                       const PolicyParams& oppo, int episodes,
                       std::uint64_t seed, bool discounted) {
  if (episodes < 1)
    throw std::invalid_argument("estimate_reward: episodes must be >= 1");
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const int member = ensemble_sample(
        ego, derive_seed(seed, "eval_pick", static_cast<std::uint64_t>(e)));
    const Trajectory traj = rollout(
        game, policy_sampler(ego.members[static_cast<std::size_t>(member)]),
        policy_sampler(oppo),
        derive_seed(seed, "eval_episode", static_cast<std::uint64_t>(e)));
    total += discounted ? traj.return_ego : traj.undiscounted_return();
  }
  return total / episodes;
}

void RewardCurve::add(double env_steps, double reward) {
  if (!points.empty() && env_steps <= points.back().first)
    throw std::invalid_argument(
        "RewardCurve: env_steps must be strictly increasing");
  points.emplace_back(env_steps, reward);
}

double auc(const RewardCurve& curve, double from_steps, double to_steps) {
  if (curve.points.size() < 2)
    throw std::invalid_argument("auc: need at least two curve points");
  if (!(from_steps < to_steps))
    throw std::invalid_argument("auc: empty window");
  if (from_steps < curve.points.front().first - 1e-9 ||
      to_steps > curve.points.back().first + 1e-9)
    throw std::invalid_argument("auc: window outside curve range");

  auto value_at = [&](double x) {
    auto it = std::lower_bound(
        curve.points.begin(), curve.points.end(), x,
        [](const std::pair<double, double>& p, double v) { return p.first < v; });
    if (it == curve.points.begin()) return it->second;
    if (it == curve.points.end()) return std::prev(it)->second;
    const auto [x1, y1] = *std::prev(it);
    const auto [x2, y2] = *it;
    if (x2 == x1) return y1;
    return y1 + (y2 - y1) * (x - x1) / (x2 - x1);
  };

  double integral = 0.0;
  double prev_x = from_steps;
  double prev_y = value_at(from_steps);
  for (const auto& [x, y] : curve.points) {
    if (x <= from_steps) continue;
    if (x >= to_steps) break;
    integral += 0.5 * (prev_y + y) * (x - prev_x);
    prev_x = x;
    prev_y = y;
  }
  integral += 0.5 * (prev_y + value_at(to_steps)) * (to_steps - prev_x);
  return integral;
}

const SettingMetrics& MetricsReport::at(const std::string& setting) const {
  for (const auto& [name, metrics] : rows)
    if (name == setting) return metrics;
  throw std::out_of_range("MetricsReport: no setting '" + setting + "'");
}

MetricsReport normalized_metrics(
    const std::map<std::string, SettingCurves>& curves, double window_from,
    double window_to) {
  const auto oracle_it = curves.find("oracle");
  const auto ensemble_it = curves.find("ensemble");
  if (oracle_it == curves.end() || ensemble_it == curves.end())
    throw std::invalid_argument(
        "normalized_metrics: oracle and ensemble reference curves required");

  auto aucs = [&](const SettingCurves& sc) {
    return std::pair{auc(sc.exploiter1, window_from, window_to),
                     auc(sc.exploiter2, window_from, window_to)};
  };
  const auto [a1_orc, a2_orc] = aucs(oracle_it->second);
  const auto [a1_ens, a2_ens] = aucs(ensemble_it->second);
  const double d_adapt = a1_ens - a1_orc;
  const double d_rob = a2_orc - a2_ens;
  const double d_abc = (a2_orc - a1_orc) - (a2_ens - a1_ens);
  constexpr double kDegenerate = 1e-12;

  // Stable presentation order, references first.
  std::vector<std::string> order = {"oracle", "ensemble", "reg_bc_rl",
                                    "bc_rl",  "reg_rl",   "reg_bc"};
  for (const auto& [name, sc] : curves)
    if (std::find(order.begin(), order.end(), name) == order.end())
      order.push_back(name);

  MetricsReport report;
  for (const std::string& name : order) {
    const auto it = curves.find(name);
    if (it == curves.end()) continue;
    const auto [a1, a2] = aucs(it->second);
    SettingMetrics m;
    if (std::abs(d_adapt) < kDegenerate) {
      m.adaptation = a1_ens - a1;
      m.degenerate_reference = true;
    } else {
      m.adaptation = (a1_ens - a1) / d_adapt;
    }
    if (std::abs(d_rob) < kDegenerate) {
      m.robustness = a2_orc - a2;
      m.degenerate_reference = true;
    } else {
      m.robustness = (a2_orc - a2) / d_rob;
    }
    m.overall = m.adaptation + m.robustness;
    const double b = a2 - a1;
    const double b_ens = a2_ens - a1_ens;
    if (std::abs(d_abc) < kDegenerate) {
      m.abc_normalized = b - b_ens;
      m.degenerate_reference = true;
    } else {
      m.abc_normalized = (b - b_ens) / d_abc;
    }
    report.rows.emplace_back(name, m);
  }
  return report;
}

std::string metrics_table(const MetricsReport& report) {
  std::ostringstream os;
  os << "Setting        Adaptation  Robustness  Overall(A+R)  NormalizedABC\n";
  os << "-------------------------------------------------------------------\n";
  os.setf(std::ios::fixed);
  os.precision(3);
  for (const auto& [name, m] : report.rows) {
    os.width(15);
    os.setf(std::ios::left, std::ios::adjustfield);
    os << name;
    os.unsetf(std::ios::adjustfield);
    os.width(10);
    os << m.adaptation;
    os.width(12);
    os << m.robustness;
    os.width(14);
    os << m.overall;
    os.width(15);
    os << m.abc_normalized;
    if (m.degenerate_reference) os << "  [degenerate reference]";
    os << "\n";
  }
  return os.str();
}

}  // namespace safeadapt
