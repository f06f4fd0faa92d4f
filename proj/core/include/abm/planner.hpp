#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "abm/env.hpp"
#include "abm/model.hpp"

namespace abm {

/// Deterministic position dynamics used inside the planner's lookahead.
/// Implementations must be pure given their constructor arguments.
class DynamicsProvider {
 public:
  virtual ~DynamicsProvider() = default;
  /// Next (agent, adversary) cells when the agent takes `a`.
  virtual std::pair<Cell, Cell> next(Cell agent, Cell adversary, Action a) const = 0;
};

/// Most likely transition of the ensemble mixture. Modes are tabulated per
/// context at construction, so lookups are constant time.
class ModelModeProvider final : public DynamicsProvider {
 public:
  explicit ModelModeProvider(const EnsembleModel& model);
  std::pair<Cell, Cell> next(Cell agent, Cell adversary, Action a) const override;

 private:
  int grid_size_;
  std::array<Move, kAgentContexts> agent_mode_{};
  std::array<Move, kAdversaryContexts> adversary_mode_{};
};

/// Ground-truth kinematics with the adversary's most likely move. Testing
/// oracle; the pipeline plans in the learned model.
class TrueModeProvider final : public DynamicsProvider {
 public:
  explicit TrueModeProvider(EnvConfig config) : config_(config) {}
  std::pair<Cell, Cell> next(Cell agent, Cell adversary, Action a) const override;

 private:
  EnvConfig config_;
};

/// True agent kinematics with a frozen adversary.
class StaticAdversaryProvider final : public DynamicsProvider {
 public:
  explicit StaticAdversaryProvider(EnvConfig config) : config_(config) {}
  std::pair<Cell, Cell> next(Cell agent, Cell adversary, Action a) const override;

 private:
  EnvConfig config_;
};

struct PlannerConfig {
  int horizon = 5;
  std::uint64_t max_sequences = 4096;  // 4^6

  void validate() const;
};

struct RankedSequence {
  std::vector<Action> actions;
  double value = 0.0;
};

struct PlanResult {
  std::vector<Action> best_sequence;
  double best_return = 0.0;
  /// All 4^H sequences, best first.
  std::vector<RankedSequence> ranked_returns;
};

/// Exhaustive MPC lookahead. A sequence's value is the undiscounted reward
/// of its simulated rollout, truncated at simulated termination. Equal
/// values prefer rewards that arrive earlier, then the lexicographically
/// smaller sequence (Up < Down < Left < Right).
PlanResult plan(const EnvConfig& config, const GridState& state, const DynamicsProvider& provider,
                const PlannerConfig& planner);

/// First action of the best sequence, without materializing the ranking.
Action act(const EnvConfig& config, const GridState& state, const DynamicsProvider& provider,
           const PlannerConfig& planner);

}  // namespace abm
