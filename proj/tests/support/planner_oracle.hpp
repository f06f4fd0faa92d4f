#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "abm/planner.hpp"

namespace abm::testing {

// Return of one action sequence, stepping through the environment's reward
// rules with the provider's positions.
inline double sequence_value(const EnvConfig& cfg, GridState s, const DynamicsProvider& p,
                             const std::vector<Action>& seq) {
  double total = 0.0;
  if (s.t >= cfg.t_max) return 0.0;
  for (Action a : seq) {
    const auto [agent, adversary] = p.next(s.agent, s.adversary, a);
    const AgentPhase phase = resolve_agent_move(cfg, s, agent);
    const StepResult r = phase.status == Status::Running
                             ? resolve_adversary_move(cfg, phase, adversary)
                             : finish_without_adversary(cfg, phase);
    total += r.reward;
    if (r.status != Status::Running) break;
    s = r.next_state;
  }
  return total;
}

inline double brute_force_best(const EnvConfig& cfg, const GridState& s, const DynamicsProvider& p,
                               int horizon) {
  double best = -1e300;
  std::vector<Action> seq(static_cast<std::size_t>(horizon));
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == seq.size()) {
      best = std::max(best, sequence_value(cfg, s, p, seq));
      return;
    }
    for (Action a : kActions) {
      seq[i] = a;
      rec(i + 1);
    }
  };
  rec(0);
  return best;
}

}  // namespace abm::testing
