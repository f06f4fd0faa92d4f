#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "abm/features.hpp"
#include "abm/rollout.hpp"

namespace abm {

/// Per-step milestone hits x[t][j]. Columns are one per fuel (in storage
/// order), then agent-at-goal, then agent-caught.
class MilestoneMatrix {
 public:
  MilestoneMatrix(std::size_t steps, int n_fuels)
      : steps_(steps), n_fuels_(n_fuels), x_(steps * columns(), 0) {}

  std::size_t steps() const { return steps_; }
  std::size_t columns() const { return static_cast<std::size_t>(n_fuels_) + 2; }
  int n_fuels() const { return n_fuels_; }
  std::size_t goal_column() const { return static_cast<std::size_t>(n_fuels_); }
  std::size_t caught_column() const { return static_cast<std::size_t>(n_fuels_) + 1; }

  bool at(std::size_t t, std::size_t j) const { return x_[t * columns() + j] != 0; }
  void set(std::size_t t, std::size_t j, bool v) { x_[t * columns() + j] = v ? 1 : 0; }
  bool any(std::size_t t) const;

 private:
  std::size_t steps_;
  int n_fuels_;
  std::vector<std::uint8_t> x_;
};

/// Trajectory abstraction, milestone half. A fuel column fires when that
/// fuel goes from uncollected at s_t to collected at s_{t+1}; the goal and
/// caught columns fire on the step whose status resolves to them.
MilestoneMatrix detect_milestones(const Episode& ep);

enum class Strategy : int {
  AgentAtGoal = 1,
  AgentCaught = 2,
  Unterminated = 3,
  UnlabeledFuel = 4,
  FuelClosestToAgent = 5,
  FuelClosestToGoal = 6,
  FuelFurthestFromAdversary = 7,
};

inline constexpr int kStrategyCount = 7;

std::string_view strategy_name(Strategy s);
std::string strategy_name_for_label(int label);

/// Strategy extraction. Every step is governed by the first milestone at or
/// after it, so the step that achieves a milestone carries that milestone's
/// label. Fuel milestones are labelled through the step's own role
/// assignment (closest-to-agent, then closest-to-goal, then
/// furthest-from-adversary). Steps after the last milestone are
/// Unterminated. When a fuel and a terminal milestone fire on the same
/// step, the terminal one governs.
std::vector<Strategy> extract_strategies(const Episode& ep, const MilestoneMatrix& x,
                                         std::span<const RoleAssignment> roles_per_step);

/// detect_milestones + per-step roles + extract_strategies.
std::vector<Strategy> label_episode(const Episode& ep);

enum class Outcome : int { Failure = 0, Success = 1 };

Outcome outcome(const Episode& ep);

}  // namespace abm
