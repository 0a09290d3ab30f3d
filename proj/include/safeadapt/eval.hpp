#pragma once

#include <map>
#include <string>
#include <vector>

#include "safeadapt/game.hpp"
#include "safeadapt/ppo.hpp"

namespace safeadapt {

// Exact mixed equilibrium of a zero-sum matrix game (row player maximizes
// payoff(i, j)). Solved by a dense tableau simplex on the column player's
// bounded form with the row strategy recovered from the duals.
struct MatrixGameSolution {
  Vec row_strategy;
  Vec col_strategy;
  double value = 0.0;
};

MatrixGameSolution solve_matrix_game(const Mat& payoff);

// Per-state action distribution of a fixed agent, keyed by that agent's
// observation encoding (which carries the step index).
using StatePolicy = std::function<Vec(const Vec& obs)>;

StatePolicy policy_fn(const PolicyParams& policy);
StatePolicy mixture_fn(const PolicyEnsemble& ensemble);

// Exact optimal expected discounted return of the free player against the
// fixed opponent, by backward finite-horizon dynamic programming over
// enumerated positions x step index. Requires a tabular game.
double best_response_value(const Game& game, const StatePolicy& fixed_policy,
                           Seat fixed_seat);

// Equilibrium expected ego return, computed by backward induction solving the
// simultaneous-move stage matrix game at every (position, step) via the LP.
double game_value(const Game& game);

// Best-response value against the policy minus the game value from the
// exploiting side's perspective; >= 0 up to numerical tolerance, 0 exactly at
// an equilibrium policy.
double exploitability(const Game& game, const StatePolicy& policy,
                      Seat policy_seat);
double exploitability(const Game& game, const StatePolicy& policy,
                      Seat policy_seat, double precomputed_game_value);

// Monte-Carlo mean ego return over fresh episodes, ego member resampled
// uniformly per episode. Undiscounted unless `discounted` is set.
double estimate_reward(const Game& game, const PolicyEnsemble& ego,
                       const PolicyParams& oppo, int episodes,
                       std::uint64_t seed, bool discounted = false);

// Reward samples along one adaptation run (x = environment steps).
struct RewardCurve {
  std::vector<std::pair<double, double>> points;  // (env_steps, reward)

  void add(double env_steps, double reward);
};

// Trapezoidal integral of the curve's linear interpolant over
// [from_steps, to_steps]; the window must be non-empty and inside the range.
double auc(const RewardCurve& curve, double from_steps, double to_steps);

struct SettingCurves {
  RewardCurve exploiter1;  // adaptation target (stationary)
  RewardCurve exploiter2;  // co-adapting exploiter
};

struct SettingMetrics {
  double adaptation = 0.0;
  double robustness = 0.0;
  double overall = 0.0;
  double abc_normalized = 0.0;
  bool degenerate_reference = false;
};

struct MetricsReport {
  std::vector<std::pair<std::string, SettingMetrics>> rows;

  const SettingMetrics& at(const std::string& setting) const;
};

// Normalizes windowed AUCs against the oracle / ensemble reference settings:
//   adaptation(x) = (A1_ens - A1_x) / (A1_ens - A1_orc)
//   robustness(x) = (A2_orc - A2_x) / (A2_orc - A2_ens)
//   overall = adaptation + robustness
//   abc(x) = (B_x - B_ens) / (B_orc - B_ens),  B = A2 - A1
// where A1/A2 are the first/second exploiter curve AUCs. A reference
// denominator below 1e-12 leaves the numerator unnormalized and sets the
// degenerate flag.
MetricsReport normalized_metrics(
    const std::map<std::string, SettingCurves>& curves, double window_from,
    double window_to);

std::string metrics_table(const MetricsReport& report);

}  // namespace safeadapt
