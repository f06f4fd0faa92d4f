#pragma once

#include <vector>

#include "abm/behavior.hpp"

namespace abm::testing {

// Replays agent actions through the true kinematics and fuel bookkeeping
// with a frozen adversary.
inline Episode craft(GridState s, const std::vector<Action>& actions, Status final_status) {
  const EnvConfig cfg;
  Episode ep;
  for (Action a : actions) {
    const AgentPhase phase = resolve_agent_move(cfg, s, agent_kinematics(cfg, s.agent, a));
    ep.steps.push_back({s, a, phase.reward});
    s = phase.state;
    s.t += 1;
  }
  ep.final_state = s;
  ep.status = final_status;
  return ep;
}

inline GridState layout(Cell agent, Cell adversary, Cell goal, std::vector<Fuel> fuels) {
  GridState s;
  s.agent = agent;
  s.adversary = adversary;
  s.goal = goal;
  s.fuels = std::move(fuels);
  return s;
}

struct CraftedCase {
  const char* name;
  Episode episode;
  std::vector<int> labels;
};

// Fuel then goal; a wandering timeout; a role switch before the fuel
// milestone.
inline std::vector<CraftedCase> crafted_cases() {
  std::vector<CraftedCase> cases;
  cases.push_back({"fuel then goal",
                   craft(layout({0, 0}, {0, 5}, {6, 0}, {{{3, 0}, false}, {{0, 7}, false}, {{7, 7}, false}}),
                         std::vector<Action>(6, Action::Right), Status::GoalReached),
                   {5, 5, 5, 1, 1, 1}});
  cases.push_back({"no milestones",
                   craft(layout({0, 0}, {7, 7}, {6, 6}, {{{3, 3}, false}, {{0, 7}, false}, {{7, 0}, false}}),
                         {Action::Up, Action::Down, Action::Up, Action::Down}, Status::TimedOut),
                   {3, 3, 3, 3}});
  // Step 1: fuel 1 is closest to the agent and to the goal, while fuel 0
  // remains the one furthest from the adversary.
  cases.push_back({"role switch 5 to 7",
                   craft(layout({0, 1}, {7, 7}, {7, 1}, {{{0, 0}, false}, {{2, 1}, false}, {{5, 5}, true}}),
                         {Action::Right, Action::Left, Action::Down, Action::Up}, Status::TimedOut),
                   {5, 7, 5, 3}});
  return cases;
}

}  // namespace abm::testing
