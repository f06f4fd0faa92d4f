#include "abm/behavior.hpp"

#include <optional>

namespace abm {

bool MilestoneMatrix::any(std::size_t t) const {
  for (std::size_t j = 0; j < columns(); ++j)
    if (at(t, j)) return true;
  return false;
}

MilestoneMatrix detect_milestones(const Episode& ep) {
  const int n_fuels = ep.steps.empty() ? static_cast<int>(ep.final_state.fuels.size())
                                       : static_cast<int>(ep.steps.front().state.fuels.size());
  MilestoneMatrix x(ep.steps.size(), n_fuels);
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const GridState& before = ep.steps[t].state;
    const GridState& after = ep.next_state(t);
    for (std::size_t k = 0; k < before.fuels.size(); ++k)
      x.set(t, k, !before.fuels[k].collected && after.fuels[k].collected);
    const bool last = t + 1 == ep.steps.size();
    if (last && ep.status == Status::GoalReached && after.agent == after.goal)
      x.set(t, x.goal_column(), true);
    if (last && ep.status == Status::Caught) x.set(t, x.caught_column(), true);
  }
  return x;
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::AgentAtGoal: return "agent at goal";
    case Strategy::AgentCaught: return "agent caught";
    case Strategy::Unterminated: return "unterminated";
    case Strategy::UnlabeledFuel: return "agent at unlabeled fuel";
    case Strategy::FuelClosestToAgent: return "agent at fuel closest to agent";
    case Strategy::FuelClosestToGoal: return "agent at fuel closest to goal";
    case Strategy::FuelFurthestFromAdversary: return "agent at fuel furthest from adversary";
  }
  return "?";
}

std::string strategy_name_for_label(int label) {
  if (label < 1 || label > kStrategyCount) return std::to_string(label);
  return std::string(strategy_name(static_cast<Strategy>(label)));
}

std::vector<Strategy> extract_strategies(const Episode& ep, const MilestoneMatrix& x,
                                         std::span<const RoleAssignment> roles_per_step) {
  const std::size_t T = ep.steps.size();
  if (x.steps() != T)
    throw UsageError("extract_strategies: milestone matrix has " + std::to_string(x.steps()) +
                     " rows for an episode of " + std::to_string(T) + " steps");
  if (roles_per_step.size() != T)
    throw UsageError("extract_strategies: expected one role assignment per step");

  // Label of the milestone firing at step t, with fuel labels resolved
  // later against the governed step's roles.
  struct Governing {
    std::size_t step;
    std::optional<Strategy> terminal;
    std::size_t fuel = 0;
  };
  std::vector<Strategy> labels(T, Strategy::Unterminated);
  std::optional<Governing> next;
  for (std::size_t i = T; i-- > 0;) {
    if (x.any(i)) {
      Governing g{i, std::nullopt, 0};
      if (x.at(i, x.goal_column())) {
        g.terminal = Strategy::AgentAtGoal;
      } else if (x.at(i, x.caught_column())) {
        g.terminal = Strategy::AgentCaught;
      } else {
        for (std::size_t k = 0; k < static_cast<std::size_t>(x.n_fuels()); ++k)
          if (x.at(i, k)) {
            g.fuel = k;
            break;
          }
      }
      next = g;
    }
    if (!next) continue;
    if (next->terminal) {
      labels[i] = *next->terminal;
      continue;
    }
    const RoleAssignment& r = roles_per_step[i];
    const auto fuel = static_cast<int>(next->fuel);
    if (r.fuel_ca == fuel) {
      labels[i] = Strategy::FuelClosestToAgent;
    } else if (r.fuel_cg == fuel) {
      labels[i] = Strategy::FuelClosestToGoal;
    } else if (r.fuel_fa == fuel) {
      labels[i] = Strategy::FuelFurthestFromAdversary;
    } else {
      labels[i] = Strategy::UnlabeledFuel;
    }
  }
  return labels;
}

std::vector<Strategy> label_episode(const Episode& ep) {
  std::vector<RoleAssignment> roles;
  roles.reserve(ep.steps.size());
  for (const EpisodeStep& s : ep.steps) roles.push_back(assign_roles(s.state));
  return extract_strategies(ep, detect_milestones(ep), roles);
}

Outcome outcome(const Episode& ep) {
  return ep.status == Status::GoalReached ? Outcome::Success : Outcome::Failure;
}

}  // namespace abm
