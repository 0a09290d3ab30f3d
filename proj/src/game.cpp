#include "safeadapt/game.hpp"

#include <cmath>
#include <stdexcept>

namespace safeadapt {

void GameSpec::validate() const {
  if (actions_ego < 1 || actions_oppo < 1)
    throw std::invalid_argument("GameSpec: action sets must be non-empty");
  if (horizon < 1) throw std::invalid_argument("GameSpec: horizon must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0))
    throw std::invalid_argument("GameSpec: discount must be in (0, 1]");
}

double Trajectory::undiscounted_return() const {
  double sum = 0.0;
  for (const Transition& t : transitions) sum += t.reward_ego;
  return sum;
}

std::vector<State> Game::enumerate_positions() const {
  return enumerate_positions_impl();
}

void Game::check_actions(const State& state, int a_ego, int a_oppo) const {
  if (state.done)
    throw std::logic_error("step: state is terminal (" + spec_.name + ")");
  if (a_ego < 0 || a_ego >= spec_.actions_ego)
    throw std::invalid_argument("step: ego action " + std::to_string(a_ego) +
                                " out of range [0, " +
                                std::to_string(spec_.actions_ego) + ") in " +
                                spec_.name);
  if (a_oppo < 0 || a_oppo >= spec_.actions_oppo)
    throw std::invalid_argument("step: opponent action " +
                                std::to_string(a_oppo) + " out of range [0, " +
                                std::to_string(spec_.actions_oppo) + ") in " +
                                spec_.name);
}

// --- MatrixGame ---

MatrixGame::MatrixGame(std::string name, Mat payoff_ego, int rounds,
                       double discount)
    : payoff_(std::move(payoff_ego)) {
  spec_.name = std::move(name);
  spec_.num_states_or_features = 1;
  spec_.actions_ego = static_cast<int>(payoff_.rows());
  spec_.actions_oppo = static_cast<int>(payoff_.cols());
  spec_.horizon = rounds;
  spec_.discount = discount;
  spec_.obs_dim_ego = 1;
  spec_.obs_dim_oppo = 1;
  spec_.validate();
}

MatrixGame MatrixGame::rps(int rounds, double discount) {
  Mat a(3, 3);
  a << 0, -1, 1,
       1, 0, -1,
       -1, 1, 0;
  return MatrixGame("rps", a, rounds, discount);
}

MatrixGame MatrixGame::biased_rps(int rounds, double discount) {
  Mat a(3, 3);
  a << 0, -1, 2,
       1, 0, -1,
       -2, 1, 0;
  return MatrixGame("biased_rps", a, rounds, discount);
}

State MatrixGame::initial_state(RngStream&) const { return State{}; }

StepResult MatrixGame::step(const State& state, int a_ego, int a_oppo) const {
  check_actions(state, a_ego, a_oppo);
  StepResult out;
  out.reward_ego = payoff_(a_ego, a_oppo);
  out.next = state;
  out.next.step = state.step + 1;
  out.done = out.next.step >= spec_.horizon;
  out.next.done = out.done;
  return out;
}

Vec MatrixGame::observe_ego(const State&) const { return Vec::Ones(1); }

Vec MatrixGame::observe_oppo(const State&) const { return Vec::Ones(1); }

std::vector<State> MatrixGame::enumerate_positions_impl() const {
  return {State{}};
}

// --- GridDuel ---

namespace {
constexpr int kRowDelta[GridDuel::kNumActions] = {-1, 1, 0, 0, 0};
constexpr int kColDelta[GridDuel::kNumActions] = {0, 0, -1, 1, 0};
}  // namespace

GridDuel::GridDuel(int rows, int cols, int horizon, double discount)
    : rows_(rows), cols_(cols), target_r_(rows - 1), target_c_(cols / 2) {
  if (rows < 2 || cols < 1)
    throw std::invalid_argument("GridDuel: grid must be at least 2x1");
  spec_.name = "grid_duel";
  spec_.num_states_or_features = rows * cols * rows * cols;
  spec_.actions_ego = kNumActions;
  spec_.actions_oppo = kNumActions;
  spec_.horizon = horizon;
  spec_.discount = discount;
  spec_.obs_dim_ego = 2 * rows * cols + 1;
  spec_.obs_dim_oppo = 2 * rows * cols + 1;
  spec_.validate();
}

State GridDuel::initial_state(RngStream&) const {
  State s;
  s.cells = {0, cols_ / 2, rows_ - 1, cols_ / 2};
  return s;
}

StepResult GridDuel::step(const State& state, int a_ego, int a_oppo) const {
  check_actions(state, a_ego, a_oppo);
  auto move = [this](int r, int c, int a) {
    int nr = r + kRowDelta[a];
    int nc = c + kColDelta[a];
    if (nr < 0 || nr >= rows_ || nc < 0 || nc >= cols_) return std::pair{r, c};
    return std::pair{nr, nc};
  };
  auto [er, ec] = move(state.cells[0], state.cells[1], a_ego);
  auto [orr, oc] = move(state.cells[2], state.cells[3], a_oppo);

  StepResult out;
  out.next.cells = {er, ec, orr, oc};
  out.next.step = state.step + 1;
  if (er == orr && ec == oc) {
    out.reward_ego = -1.0;  // intercepted
    out.done = true;
  } else if (er == target_r_ && ec == target_c_) {
    out.reward_ego = 1.0;  // reached the target uncontested
    out.done = true;
  } else {
    out.reward_ego = 0.0;
    out.done = out.next.step >= spec_.horizon;
  }
  out.next.done = out.done;
  return out;
}

Vec GridDuel::observe(const State& state, bool ego_view) const {
  const int n = rows_ * cols_;
  Vec obs = Vec::Zero(2 * n + 1);
  const int own = ego_view ? cell_index(state.cells[0], state.cells[1])
                           : cell_index(state.cells[2], state.cells[3]);
  const int other = ego_view ? cell_index(state.cells[2], state.cells[3])
                             : cell_index(state.cells[0], state.cells[1]);
  obs[own] = 1.0;
  obs[n + other] = 1.0;
  obs[2 * n] = static_cast<double>(state.step) / spec_.horizon;
  return obs;
}

Vec GridDuel::observe_ego(const State& state) const {
  return observe(state, true);
}

Vec GridDuel::observe_oppo(const State& state) const {
  return observe(state, false);
}

int GridDuel::num_state_keys() const {
  const int n = rows_ * cols_;
  return n * n;
}

int GridDuel::state_key(const State& state) const {
  const int n = rows_ * cols_;
  return cell_index(state.cells[0], state.cells[1]) * n +
         cell_index(state.cells[2], state.cells[3]);
}

bool GridDuel::terminal_position(const State& state) const {
  const bool shared = state.cells[0] == state.cells[2] &&
                      state.cells[1] == state.cells[3];
  const bool at_target =
      state.cells[0] == target_r_ && state.cells[1] == target_c_;
  return shared || at_target;
}

std::vector<State> GridDuel::enumerate_positions_impl() const {
  std::vector<State> states;
  states.reserve(static_cast<std::size_t>(num_state_keys()));
  for (int er = 0; er < rows_; ++er)
    for (int ec = 0; ec < cols_; ++ec)
      for (int orr = 0; orr < rows_; ++orr)
        for (int oc = 0; oc < cols_; ++oc) {
          State s;
          s.cells = {er, ec, orr, oc};
          states.push_back(s);
        }
  return states;
}

// --- free functions ---

State reset(const Game& game, std::uint64_t seed) {
  RngStream rng(seed);
  return game.initial_state(rng);
}

Trajectory rollout(const Game& game, const ActionSampler& sample_ego,
                   const ActionSampler& sample_oppo, std::uint64_t seed) {
  RngStream rng(seed);
  State state = game.initial_state(rng);
  Trajectory traj;
  traj.transitions.reserve(static_cast<std::size_t>(game.spec().horizon));
  double gamma_t = 1.0;
  while (!state.done) {
    Transition t;
    t.obs_ego = game.observe_ego(state);
    t.obs_oppo = game.observe_oppo(state);
    t.action_ego = sample_ego(t.obs_ego, rng);
    t.action_oppo = sample_oppo(t.obs_oppo, rng);
    StepResult r = game.step(state, t.action_ego, t.action_oppo);
    t.reward_ego = r.reward_ego;
    t.done = r.done;
    traj.return_ego += gamma_t * r.reward_ego;
    gamma_t *= game.spec().discount;
    traj.transitions.push_back(std::move(t));
    state = r.next;
  }
  return traj;
}

std::vector<State> enumerate_joint_states(const Game& game) {
  if (!game.tabular())
    throw std::invalid_argument("enumerate_joint_states: game '" +
                                game.spec().name + "' is not tabular");
  return game.enumerate_positions();
}

std::unique_ptr<Game> make_game(const std::string& name, int grid_rows,
                                int grid_cols, int horizon, double discount,
                                int matrix_rounds) {
  if (name == "rps")
    return std::make_unique<MatrixGame>(MatrixGame::rps(matrix_rounds, discount));
  if (name == "biased_rps")
    return std::make_unique<MatrixGame>(
        MatrixGame::biased_rps(matrix_rounds, discount));
  if (name == "grid_duel")
    return std::make_unique<GridDuel>(grid_rows, grid_cols, horizon, discount);
  throw std::invalid_argument("unknown game '" + name +
                              "' (expected rps, biased_rps or grid_duel)");
}

}  // namespace safeadapt
