#include "abm/planner.hpp"

#include <algorithm>

namespace abm {

ModelModeProvider::ModelModeProvider(const EnsembleModel& model) : grid_size_(model.grid_size) {
  if (model.members.empty()) throw UsageError("ModelModeProvider: empty ensemble");
  const double k = static_cast<double>(model.members.size());
  // A representative cell for each boundary profile; masking depends on the
  // profile only, so the mode is a function of the context index.
  auto representative = [&](int profile) {
    const int g = grid_size_;
    return Cell{(profile & 1) ? 0 : (profile & 2) ? g - 1 : std::min(1, g - 1),
                (profile & 4) ? 0 : (profile & 8) ? g - 1 : std::min(1, g - 1)};
  };
  for (int ctx = 0; ctx < kAgentContexts; ++ctx) {
    const Cell at = representative(ctx % kProfiles);
    const auto a = static_cast<Action>(ctx / kProfiles);
    if (boundary_profile(grid_size_, at) != ctx % kProfiles) continue;  // infeasible profile
    MoveDistribution mean{};
    for (const DynamicsMember& m : model.members) {
      const MoveDistribution p = m.agent_probs(at, a);
      for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i] / k;
    }
    agent_mode_[static_cast<std::size_t>(ctx)] = argmax_move(mean);
  }
  for (int ctx = 0; ctx < kAdversaryContexts; ++ctx) {
    const Cell at = representative(ctx % kProfiles);
    if (boundary_profile(grid_size_, at) != ctx % kProfiles) continue;
    const int signs = ctx / kProfiles;
    // Any agent cell with the right signs selects the same context.
    const Cell agent{at.x + (signs / 3 - 1), at.y + (signs % 3 - 1)};
    MoveDistribution mean{};
    for (const DynamicsMember& m : model.members) {
      const MoveDistribution p = m.adversary_probs(at, agent);
      for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i] / k;
    }
    adversary_mode_[static_cast<std::size_t>(ctx)] = argmax_move(mean);
  }
}

std::pair<Cell, Cell> ModelModeProvider::next(Cell agent, Cell adversary, Action a) const {
  const Cell agent_next =
      apply_move(agent, agent_mode_[static_cast<std::size_t>(agent_context(grid_size_, agent, a))]);
  const Cell adversary_next = apply_move(
      adversary,
      adversary_mode_[static_cast<std::size_t>(adversary_context(grid_size_, adversary, agent_next))]);
  return {agent_next, adversary_next};
}

std::pair<Cell, Cell> TrueModeProvider::next(Cell agent, Cell adversary, Action a) const {
  const Cell agent_next = agent_kinematics(config_, agent, a);
  const Move m = argmax_move(adversary_move_distribution(config_, adversary, agent_next));
  return {agent_next, apply_move(adversary, m)};
}

std::pair<Cell, Cell> StaticAdversaryProvider::next(Cell agent, Cell adversary, Action a) const {
  return {agent_kinematics(config_, agent, a), adversary};
}

void PlannerConfig::validate() const {
  if (horizon < 1) throw ConfigError("planner.horizon must be >= 1");
  std::uint64_t n = 1;
  for (int i = 0; i < horizon; ++i) {
    n *= 4;
    if (n > max_sequences)
      throw ConfigError("planner: 4^" + std::to_string(horizon) +
                        " sequences exceed planner.max_sequences = " +
                        std::to_string(max_sequences));
  }
}

namespace {

constexpr int kMaxPlannerFuels = 32;

struct TimedSequence {
  RankedSequence seq;
  double timing = 0.0;
};

// Compact copy of the reward bookkeeping in resolve_agent_move /
// resolve_adversary_move; the equivalence is covered by tests.
struct SimState {
  Cell agent;
  Cell adversary;
  std::uint32_t collected = 0;
  int t = 0;
  bool done = false;
};

class Search {
 public:
  Search(const EnvConfig& config, const GridState& state, const DynamicsProvider& provider,
         int horizon, std::vector<TimedSequence>* ranked)
      : config_(config), provider_(provider), horizon_(horizon), ranked_(ranked) {
    if (state.fuels.size() > kMaxPlannerFuels) throw ConfigError("planner supports at most 32 fuels");
    goal_ = state.goal;
    for (std::size_t i = 0; i < state.fuels.size(); ++i) {
      fuel_cells_.push_back(state.fuels[i].cell);
      if (state.fuels[i].collected) root_.collected |= 1u << i;
    }
    all_mask_ = state.fuels.size() == 32 ? ~0u : (1u << state.fuels.size()) - 1u;
    root_.agent = state.agent;
    root_.adversary = state.adversary;
    root_.t = state.t;
    root_.done = state.t >= config.t_max;
    prefix_.reserve(static_cast<std::size_t>(horizon));
  }

  void run() { expand(root_, 0.0, 0.0); }

  const std::vector<Action>& best() const { return best_; }
  double best_value() const { return best_value_; }

 private:
  double advance(SimState& s, Action a) const {
    const auto [agent, adversary] = provider_.next(s.agent, s.adversary, a);
    double reward = 0.0;
    if (agent == s.adversary) {
      reward = config_.r_capture;
      s.done = true;
    } else {
      bool fuel = false;
      for (std::size_t i = 0; i < fuel_cells_.size(); ++i) {
        if (!(s.collected & (1u << i)) && fuel_cells_[i] == agent) {
          s.collected |= 1u << i;
          reward += config_.r_fuel;
          fuel = true;
          break;
        }
      }
      if (!fuel && agent == goal_) {
        reward += (s.collected & all_mask_) == all_mask_ ? config_.r_goal_boosted
                                                         : config_.r_goal_base;
        s.done = true;
      }
      if (!s.done) {
        s.adversary = adversary;
        if (adversary == agent) {
          reward += config_.r_capture;
          s.done = true;
        }
      }
    }
    s.agent = agent;
    s.t += 1;
    if (s.t >= config_.t_max) s.done = true;
    return reward;
  }

  void expand(const SimState& s, double value, double timing) {
    const int depth = static_cast<int>(prefix_.size());
    if (depth == horizon_ || s.done) {
      leaf(value, timing);
      return;
    }
    for (Action a : kActions) {
      SimState child = s;
      const double r = advance(child, a);
      prefix_.push_back(a);
      expand(child, value + r, timing + r * static_cast<double>(horizon_ - depth));
      prefix_.pop_back();
    }
  }

  // A leaf at depth d stands for all 4^(H-d) completions of the prefix.
  void leaf(double value, double timing) {
    const bool better = !have_best_ || value > best_value_ ||
                        (value == best_value_ && timing > best_timing_);
    if (better) {
      have_best_ = true;
      best_value_ = value;
      best_timing_ = timing;
      best_ = prefix_;
      best_.resize(static_cast<std::size_t>(horizon_), Action::Up);
    }
    if (ranked_ != nullptr) emit_completions(value, timing);
  }

  void emit_completions(double value, double timing) {
    const std::size_t fixed = prefix_.size();
    std::vector<Action> seq = prefix_;
    seq.resize(static_cast<std::size_t>(horizon_), Action::Up);
    for (;;) {
      ranked_->push_back({{seq, value}, timing});
      // Odometer over the free suffix, rightmost position fastest.
      std::size_t i = seq.size();
      for (; i > fixed; --i) {
        Action& slot = seq[i - 1];
        if (slot != Action::Right) {
          slot = static_cast<Action>(static_cast<int>(slot) + 1);
          break;
        }
        slot = Action::Up;
      }
      if (i == fixed) return;
    }
  }

 private:
  const EnvConfig& config_;
  const DynamicsProvider& provider_;
  int horizon_;
  std::vector<TimedSequence>* ranked_;
  Cell goal_;
  std::vector<Cell> fuel_cells_;
  std::uint32_t all_mask_ = 0;
  SimState root_;
  std::vector<Action> prefix_;
  std::vector<Action> best_;
  double best_value_ = 0.0;
  double best_timing_ = 0.0;
  bool have_best_ = false;
};

}  // namespace

PlanResult plan(const EnvConfig& config, const GridState& state, const DynamicsProvider& provider,
                const PlannerConfig& planner) {
  planner.validate();
  PlanResult result;
  std::vector<TimedSequence> all;
  Search search(config, state, provider, planner.horizon, &all);
  search.run();
  result.best_sequence = search.best();
  result.best_return = search.best_value();

  // Emission order is lexicographic, so a stable sort on (value, timing)
  // reproduces the planner's full preference order.
  std::stable_sort(all.begin(), all.end(), [](const TimedSequence& a, const TimedSequence& b) {
    if (a.seq.value != b.seq.value) return a.seq.value > b.seq.value;
    return a.timing > b.timing;
  });
  result.ranked_returns.reserve(all.size());
  for (TimedSequence& t : all) result.ranked_returns.push_back(std::move(t.seq));
  return result;
}

Action act(const EnvConfig& config, const GridState& state, const DynamicsProvider& provider,
           const PlannerConfig& planner) {
  planner.validate();
  Search search(config, state, provider, planner.horizon, nullptr);
  search.run();
  return search.best().front();
}

}  // namespace abm
