#include "abm/env.hpp"

#include <algorithm>
#include <numeric>

namespace abm {
namespace {

std::atomic<std::uint64_t> g_true_steps{0};

constexpr int kMaxPlacementAttempts = 100000;

}  // namespace

char action_code(Action a) {
  switch (a) {
    case Action::Up: return 'U';
    case Action::Down: return 'D';
    case Action::Left: return 'L';
    case Action::Right: return 'R';
  }
  return '?';
}

Action action_from_code(char c) {
  switch (c) {
    case 'U': return Action::Up;
    case 'D': return Action::Down;
    case 'L': return Action::Left;
    case 'R': return Action::Right;
    default: throw DataError(std::string("unknown action code '") + c + "'");
  }
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Left: return "Left";
    case Action::Right: return "Right";
  }
  return "?";
}

std::string_view status_name(Status s) {
  switch (s) {
    case Status::Running: return "running";
    case Status::GoalReached: return "goal";
    case Status::Caught: return "caught";
    case Status::TimedOut: return "timeout";
  }
  return "?";
}

Cell apply_move(Cell c, Move m) {
  switch (m) {
    case Move::Stay: break;
    case Move::PlusX: ++c.x; break;
    case Move::MinusX: --c.x; break;
    case Move::PlusY: ++c.y; break;
    case Move::MinusY: --c.y; break;
  }
  return c;
}

Move action_move(Action a) {
  switch (a) {
    case Action::Up: return Move::PlusY;
    case Action::Down: return Move::MinusY;
    case Action::Left: return Move::MinusX;
    case Action::Right: return Move::PlusX;
  }
  return Move::Stay;
}

int GridState::remaining_fuels() const {
  return static_cast<int>(std::count_if(fuels.begin(), fuels.end(),
                                        [](const Fuel& f) { return !f.collected; }));
}

void EnvConfig::validate() const {
  if (grid_size < 1) throw ConfigError("env.grid_size must be >= 1");
  if (n_fuels < 0) throw ConfigError("env.n_fuels must be >= 0");
  if (!(eps_adv >= 0.0 && eps_adv <= 1.0)) throw ConfigError("env.eps_adv must lie in [0, 1]");
  if (!(r_fuel > 0.0)) throw ConfigError("env.r_fuel must be > 0");
  if (!(r_goal_base > r_fuel)) throw ConfigError("env.r_goal_base must exceed env.r_fuel");
  if (!(r_goal_boosted > r_goal_base))
    throw ConfigError("env.r_goal_boosted must exceed env.r_goal_base");
  if (!(r_capture < 0.0)) throw ConfigError("env.r_capture must be < 0");
  if (t_max <= 0) throw ConfigError("env.t_max must be > 0");
  if (min_initial_agent_adversary_distance < 0)
    throw ConfigError("env.min_initial_agent_adversary_distance must be >= 0");
  if (grid_size * grid_size < 3 + n_fuels)
    throw ConfigError("env: grid too small to place " + std::to_string(3 + n_fuels) +
                      " entities on distinct cells");
  if (2 * (grid_size - 1) < min_initial_agent_adversary_distance)
    throw ConfigError("env: min_initial_agent_adversary_distance exceeds the grid diameter");
}

GridState sample_initial_state(const EnvConfig& config, Rng& rng) {
  config.validate();
  const int n_cells = config.grid_size * config.grid_size;
  const int n_entities = 3 + config.n_fuels;
  std::vector<int> cells(static_cast<std::size_t>(n_cells));
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    std::iota(cells.begin(), cells.end(), 0);
    // Partial Fisher-Yates: the first n_entities slots are a uniform draw
    // without replacement.
    for (int i = 0; i < n_entities; ++i) {
      const auto j = i + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_cells - i)));
      std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
    }
    auto to_cell = [&](int k) {
      const int id = cells[static_cast<std::size_t>(k)];
      return Cell{id % config.grid_size, id / config.grid_size};
    };
    GridState s;
    s.agent = to_cell(0);
    s.adversary = to_cell(1);
    if (manhattan(s.agent, s.adversary) < config.min_initial_agent_adversary_distance) continue;
    s.goal = to_cell(2);
    for (int k = 0; k < config.n_fuels; ++k) s.fuels.push_back(Fuel{to_cell(3 + k), false});
    return s;
  }
  throw ConfigError("env: placement constraints could not be satisfied");
}

GridState new_episode(const EnvConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return sample_initial_state(config, rng);
}

Cell agent_kinematics(const EnvConfig& config, Cell pos, Action a) {
  const Cell next = apply_move(pos, action_move(a));
  return config.in_bounds(next) ? next : pos;
}

MoveDistribution adversary_move_distribution(const EnvConfig& config, Cell adversary, Cell agent) {
  MoveDistribution dist{};
  if (adversary == agent) {
    dist[static_cast<int>(Move::Stay)] = 1.0;
    return dist;
  }
  const int d0 = manhattan(adversary, agent);
  std::array<bool, 5> greedy{}, legal{};
  int n_greedy = 0, n_legal = 0;
  for (Move m : kMoves) {
    if (m == Move::Stay) continue;
    const Cell c = apply_move(adversary, m);
    if (!config.in_bounds(c)) continue;
    const auto i = static_cast<std::size_t>(m);
    legal[i] = true;
    ++n_legal;
    if (manhattan(c, agent) < d0) {
      greedy[i] = true;
      ++n_greedy;
    }
  }
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (greedy[i]) dist[i] += (1.0 - config.eps_adv) / n_greedy;
    if (legal[i]) dist[i] += config.eps_adv / n_legal;
  }
  return dist;
}

MoveDistribution adversary_move_distribution(const EnvConfig& config, const GridState& state) {
  return adversary_move_distribution(config, state.adversary, state.agent);
}

Move sample_move(const MoveDistribution& dist, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  Move chosen = Move::Stay;
  for (Move m : kMoves) {
    const double p = dist[static_cast<std::size_t>(m)];
    if (p <= 0.0) continue;
    acc += p;
    chosen = m;  // the last positive entry absorbs rounding at the top end
    if (u < acc) break;
  }
  return chosen;
}

Move argmax_move(const MoveDistribution& dist) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i)
    if (dist[i] > dist[best]) best = i;
  return static_cast<Move>(best);
}

AgentPhase resolve_agent_move(const EnvConfig& config, const GridState& state, Cell next_agent) {
  AgentPhase out{state, 0.0, Status::Running};
  out.state.agent = next_agent;
  if (next_agent == state.adversary) {
    out.reward = config.r_capture;
    out.status = Status::Caught;
    return out;
  }
  for (Fuel& f : out.state.fuels) {
    if (!f.collected && f.cell == next_agent) {
      f.collected = true;
      out.reward += config.r_fuel;
      return out;
    }
  }
  if (next_agent == state.goal) {
    out.reward += out.state.all_fuels_collected() ? config.r_goal_boosted : config.r_goal_base;
    out.status = Status::GoalReached;
  }
  return out;
}

StepResult finish_without_adversary(const EnvConfig& config, const AgentPhase& phase) {
  StepResult r{phase.state, phase.reward, phase.status};
  r.next_state.t += 1;
  if (r.status == Status::Running && r.next_state.t >= config.t_max) r.status = Status::TimedOut;
  return r;
}

StepResult resolve_adversary_move(const EnvConfig& config, const AgentPhase& phase,
                                  Cell next_adversary) {
  if (phase.status != Status::Running) return finish_without_adversary(config, phase);
  AgentPhase moved = phase;
  moved.state.adversary = next_adversary;
  if (next_adversary == moved.state.agent) {
    moved.reward += config.r_capture;
    moved.status = Status::Caught;
  }
  return finish_without_adversary(config, moved);
}

StepResult step(const EnvConfig& config, const GridState& state, Action a, Rng& rng) {
  if (state.t >= config.t_max) throw UsageError("step: episode clock already at t_max");
  g_true_steps.fetch_add(1, std::memory_order_relaxed);
  const AgentPhase phase = resolve_agent_move(config, state, agent_kinematics(config, state.agent, a));
  if (phase.status != Status::Running) return finish_without_adversary(config, phase);

  const Move chosen = sample_move(adversary_move_distribution(config, phase.state), rng);
  return resolve_adversary_move(config, phase, apply_move(phase.state.adversary, chosen));
}

std::uint64_t true_env_step_count() { return g_true_steps.load(std::memory_order_relaxed); }

Env::Env(EnvConfig config, std::uint64_t seed) : config_(config), rng_(seed) {
  state_ = sample_initial_state(config_, rng_);
}

StepResult Env::step(Action a) {
  if (status_ != Status::Running) throw UsageError("step called on a terminated episode");
  StepResult r = abm::step(config_, state_, a, rng_);
  state_ = r.next_state;
  status_ = r.status;
  return r;
}

std::vector<std::uint8_t> to_channels(const EnvConfig& config, const GridState& state) {
  const auto n = static_cast<std::size_t>(config.grid_size);
  std::vector<std::uint8_t> planes(4 * n * n, 0);
  auto set = [&](std::size_t plane, Cell c) {
    planes[plane * n * n + static_cast<std::size_t>(c.y) * n + static_cast<std::size_t>(c.x)] = 1;
  };
  set(0, state.agent);
  set(1, state.adversary);
  set(2, state.goal);
  for (const Fuel& f : state.fuels)
    if (!f.collected) set(3, f.cell);
  return planes;
}

}  // namespace abm
