#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <string_view>
#include <vector>

#include "abm/common.hpp"

namespace abm {

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

inline int manhattan(Cell a, Cell b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

// Declaration order is the planner's lexicographic tie-break order.
enum class Action : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::array<Action, 4> kActions = {Action::Up, Action::Down, Action::Left,
                                                   Action::Right};

char action_code(Action a);  // 'U', 'D', 'L', 'R'
Action action_from_code(char c);
std::string_view action_name(Action a);

// Unit displacement of an entity in one step. Up increases y.
enum class Move : std::uint8_t { Stay = 0, PlusX = 1, MinusX = 2, PlusY = 3, MinusY = 4 };

inline constexpr std::array<Move, 5> kMoves = {Move::Stay, Move::PlusX, Move::MinusX, Move::PlusY,
                                               Move::MinusY};

Cell apply_move(Cell c, Move m);
Move action_move(Action a);

struct Fuel {
  Cell cell;
  bool collected = false;

  friend bool operator==(const Fuel&, const Fuel&) = default;
};

struct GridState {
  Cell agent;
  Cell adversary;
  Cell goal;
  std::vector<Fuel> fuels;
  int t = 0;

  int remaining_fuels() const;
  bool all_fuels_collected() const { return remaining_fuels() == 0; }

  friend bool operator==(const GridState&, const GridState&) = default;
};

enum class Status : std::uint8_t { Running, GoalReached, Caught, TimedOut };

std::string_view status_name(Status s);

struct StepResult {
  GridState next_state;
  double reward = 0.0;
  Status status = Status::Running;
};

struct EnvConfig {
  int grid_size = 8;
  int n_fuels = 3;
  double eps_adv = 0.25;
  double r_fuel = 1.0;
  double r_goal_base = 1.5;
  double r_goal_boosted = 10.0;
  double r_capture = -10.0;
  int t_max = 60;
  int min_initial_agent_adversary_distance = 3;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < grid_size && c.y < grid_size;
  }

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

/// Initial placement: agent, adversary, goal and fuels on pairwise distinct
/// cells, with the agent/adversary distance constraint enforced by
/// rejection. Deterministic in `seed`.
GridState new_episode(const EnvConfig& config, std::uint64_t seed);

/// Same placement, drawing from an existing engine.
GridState sample_initial_state(const EnvConfig& config, Rng& rng);

/// One-cell move; off-grid moves leave the agent in place.
Cell agent_kinematics(const EnvConfig& config, Cell pos, Action a);

/// Probabilities indexed by Move (Stay, +x, -x, +y, -y). Sums to 1.
using MoveDistribution = std::array<double, 5>;

/// Epsilon-greedy chase. Greedy mass goes to in-bounds moves that strictly
/// reduce the Manhattan distance to the agent (Stay when co-located); the
/// epsilon share is spread over all in-bounds moves.
MoveDistribution adversary_move_distribution(const EnvConfig& config, Cell adversary, Cell agent);
MoveDistribution adversary_move_distribution(const EnvConfig& config, const GridState& state);

/// Inverse-CDF draw using one uniform01 variate.
Move sample_move(const MoveDistribution& dist, Rng& rng);

/// Most likely entry; ties go to the earlier Move.
Move argmax_move(const MoveDistribution& dist);

/// Outcome of the agent half of a step, before the adversary moves.
struct AgentPhase {
  GridState state;  // agent moved, fuel bookkeeping applied, t not yet advanced
  double reward = 0.0;
  Status status = Status::Running;
};

// Reward and termination rules, factored so that the true environment, the
// planner's simulation and imagined rollouts share one implementation.
AgentPhase resolve_agent_move(const EnvConfig& config, const GridState& state, Cell next_agent);
StepResult resolve_adversary_move(const EnvConfig& config, const AgentPhase& phase,
                                  Cell next_adversary);
// Applies the clock to a phase whose adversary half was skipped.
StepResult finish_without_adversary(const EnvConfig& config, const AgentPhase& phase);

/// True-environment transition. Consumes `rng` only when the adversary moves.
/// Increments the global true-step counter.
StepResult step(const EnvConfig& config, const GridState& state, Action a, Rng& rng);

/// Number of true-environment transitions executed by this process.
std::uint64_t true_env_step_count();

/// Seeded episode driver enforcing the terminal-state contract.
class Env {
 public:
  Env(EnvConfig config, std::uint64_t seed);

  const GridState& state() const { return state_; }
  Status status() const { return status_; }
  const EnvConfig& config() const { return config_; }

  /// Throws UsageError once the episode has terminated.
  StepResult step(Action a);

 private:
  EnvConfig config_;
  Rng rng_;
  GridState state_;
  Status status_ = Status::Running;
};

/// Four grid_size x grid_size binary planes (agent, adversary, goal,
/// uncollected fuels), each row-major with row index y.
std::vector<std::uint8_t> to_channels(const EnvConfig& config, const GridState& state);

}  // namespace abm
