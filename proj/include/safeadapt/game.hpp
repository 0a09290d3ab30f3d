#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "safeadapt/rng.hpp"

namespace safeadapt {

// Static description of a zero-sum simultaneous-move two-player Markov game.
// Both agents observe the full state (as real-valued feature vectors); the
// opponent's reward is always the negation of the ego reward and is never
// stored separately.
struct GameSpec {
  std::string name;
  int num_states_or_features = 1;  // tabular position-state count
  int actions_ego = 0;
  int actions_oppo = 0;
  int horizon = 1;
  double discount = 1.0;
  int obs_dim_ego = 0;
  int obs_dim_oppo = 0;

  void validate() const;
};

// Discrete game state. `cells` holds game-specific coordinates
// (GridDuel: ego row, ego col, opponent row, opponent col; matrix games
// leave it unused). `step` counts committed simultaneous moves.
struct State {
  int step = 0;
  bool done = false;
  std::array<int, 4> cells{};
};

struct StepResult {
  State next;
  double reward_ego = 0.0;
  bool done = false;
};

struct Transition {
  Vec obs_ego;
  Vec obs_oppo;
  int action_ego = 0;
  int action_oppo = 0;
  double reward_ego = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> transitions;
  double return_ego = 0.0;  // discounted sum of ego rewards

  double undiscounted_return() const;
};

class Game {
 public:
  virtual ~Game() = default;

  const GameSpec& spec() const { return spec_; }

  virtual State initial_state(RngStream& rng) const = 0;
  // Commits both actions simultaneously; throws std::invalid_argument on an
  // out-of-range action index and std::logic_error when stepping a done state.
  virtual StepResult step(const State& state, int a_ego, int a_oppo) const = 0;
  virtual Vec observe_ego(const State& state) const = 0;
  virtual Vec observe_oppo(const State& state) const = 0;

  // Tabular games expose an exhaustive position-state enumeration (step index
  // excluded; dynamic-programming oracles sweep it separately) plus a dense
  // integer key per position for DP tables.
  virtual bool tabular() const { return true; }
  virtual int num_state_keys() const = 0;
  virtual int state_key(const State& state) const = 0;
  // True for positions that end an episode on arrival; their value is zero.
  virtual bool terminal_position(const State& state) const = 0;

  std::vector<State> enumerate_positions() const;

 protected:
  void check_actions(const State& state, int a_ego, int a_oppo) const;
  virtual std::vector<State> enumerate_positions_impl() const = 0;

  GameSpec spec_;
};

// One-shot (or repeated) matrix game. `payoff(i, j)` is the ego reward when
// ego plays row i and the opponent plays column j; an episode is `rounds`
// simultaneous moves over a single dummy state. Observations are the constant
// feature [1].
class MatrixGame : public Game {
 public:
  MatrixGame(std::string name, Mat payoff_ego, int rounds = 1,
             double discount = 1.0);

  // Rock-paper-scissors with the standard +-1 payoff convention
  // (rock loses to paper, beats scissors).
  static MatrixGame rps(int rounds = 1, double discount = 1.0);
  // Asymmetric-win variant: a rock win pays 2, other wins pay 1.
  // Equilibrium mixture (1/4, 1/2, 1/4) for both players, value 0.
  static MatrixGame biased_rps(int rounds = 1, double discount = 1.0);

  const Mat& payoff() const { return payoff_; }

  State initial_state(RngStream& rng) const override;
  StepResult step(const State& state, int a_ego, int a_oppo) const override;
  Vec observe_ego(const State& state) const override;
  Vec observe_oppo(const State& state) const override;
  int num_state_keys() const override { return 1; }
  int state_key(const State&) const override { return 0; }
  bool terminal_position(const State&) const override { return false; }

 protected:
  std::vector<State> enumerate_positions_impl() const override;

 private:
  Mat payoff_;
};

// Grid pursuit duel on an R x C grid. Both agents move simultaneously from
// {up, down, left, right, stay}; moves into walls stay in place and
// collisions are resolved after both moves commit. Ego starts at
// (0, C/2), the opponent at (R-1, C/2), which is also the ego's target cell.
// Sharing a cell with the opponent ends the episode at -1 (interception,
// checked first); reaching the target ends it at +1; step reward is 0.
// Observations are one-hot own position + one-hot other position + the
// normalized step counter, so the layout is role-swapped between agents.
class GridDuel : public Game {
 public:
  GridDuel(int rows = 5, int cols = 5, int horizon = 25,
           double discount = 0.99);

  State initial_state(RngStream& rng) const override;
  StepResult step(const State& state, int a_ego, int a_oppo) const override;
  Vec observe_ego(const State& state) const override;
  Vec observe_oppo(const State& state) const override;
  int num_state_keys() const override;
  int state_key(const State& state) const override;
  bool terminal_position(const State& state) const override;

  static constexpr int kNumActions = 5;  // up, down, left, right, stay

 protected:
  std::vector<State> enumerate_positions_impl() const override;

 private:
  int cell_index(int r, int c) const { return r * cols_ + c; }
  Vec observe(const State& state, bool ego_view) const;

  int rows_;
  int cols_;
  int target_r_;
  int target_c_;
};

using ActionSampler = std::function<int(const Vec& obs, RngStream& rng)>;

State reset(const Game& game, std::uint64_t seed);

// Plays one episode to termination. The rng stream is seeded from `seed`;
// per step the ego action is drawn first, then the opponent action, so
// identical seeds and samplers reproduce the trajectory exactly.
Trajectory rollout(const Game& game, const ActionSampler& sample_ego,
                   const ActionSampler& sample_oppo, std::uint64_t seed);

// Exhaustive duplicate-free position enumeration; throws on non-tabular games.
std::vector<State> enumerate_joint_states(const Game& game);

std::unique_ptr<Game> make_game(const std::string& name, int grid_rows,
                                int grid_cols, int horizon, double discount,
                                int matrix_rounds);

}  // namespace safeadapt
