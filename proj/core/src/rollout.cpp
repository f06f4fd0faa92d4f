#include "abm/rollout.hpp"

#include <atomic>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "abm/config.hpp"

namespace abm {

std::string_view source_name(Source s) { return s == Source::Real ? "real" : "imagined"; }

std::string_view init_mode_name(InitMode m) {
  switch (m) {
    case InitMode::Random: return "random";
    case InitMode::ByHand: return "by_hand";
    case InitMode::FromEnvObservation: return "from_env";
  }
  return "?";
}

double EpisodeSet::success_rate() const {
  if (episodes.empty()) return 0.0;
  std::size_t wins = 0;
  for (const Episode& e : episodes) wins += e.status == Status::GoalReached ? 1 : 0;
  return static_cast<double>(wins) / static_cast<double>(episodes.size());
}

double EpisodeSet::mean_length() const {
  if (episodes.empty()) return 0.0;
  std::size_t total = 0;
  for (const Episode& e : episodes) total += e.length();
  return static_cast<double>(total) / static_cast<double>(episodes.size());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void validate_episode(const EnvConfig& config, const Episode& ep) {
  if (ep.steps.empty()) throw DataError("episode has no steps");
  if (ep.steps.size() > static_cast<std::size_t>(config.t_max))
    throw DataError("episode longer than t_max");
  if (ep.status == Status::Running) throw DataError("episode is not terminated");
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const GridState& s = ep.steps[t].state;
    const GridState& n = ep.next_state(t);
    if (!config.in_bounds(s.agent) || !config.in_bounds(s.adversary) || !config.in_bounds(n.agent) ||
        !config.in_bounds(n.adversary))
      throw DataError("episode position out of bounds at step " + std::to_string(t));
    if (s.goal != n.goal || s.fuels.size() != n.fuels.size())
      throw DataError("goal or fuel layout changes at step " + std::to_string(t));
    for (std::size_t k = 0; k < s.fuels.size(); ++k)
      if (s.fuels[k].cell != n.fuels[k].cell || (s.fuels[k].collected && !n.fuels[k].collected))
        throw DataError("fuel flags not monotone at step " + std::to_string(t));
    (void)displacement(s.agent, n.agent);
    (void)displacement(s.adversary, n.adversary);
  }
}

namespace {

Episode run_true_env(const EnvConfig& config, std::uint64_t seed, Source source,
                     const std::function<Action(const GridState&)>& policy) {
  Episode ep;
  ep.source = source;
  ep.seed = seed;
  ep.init_mode = InitMode::Random;
  Env env(config, seed);
  while (env.status() == Status::Running) {
    const GridState s = env.state();
    const Action a = policy(s);
    const StepResult r = env.step(a);
    ep.steps.push_back({s, a, r.reward});
  }
  ep.final_state = env.state();
  ep.status = env.status();
  return ep;
}

EpisodeSet make_set(const EnvConfig& config, std::vector<Episode> episodes) {
  EpisodeSet set;
  set.config = config;
  set.episodes = std::move(episodes);
  return set;
}

}  // namespace

EpisodeSet collect_real(const EnvConfig& config, const EnsembleModel& model,
                        const PlannerConfig& planner, std::size_t n, std::uint64_t seed,
                        unsigned threads) {
  config.validate();
  planner.validate();
  if (n < 1) throw ConfigError("collect_real: n must be >= 1");
  const ModelModeProvider provider(model);
  std::vector<Episode> episodes(n);
  parallel_for(n, threads, [&](std::size_t i) {
    episodes[i] = run_true_env(config, derive_seed(seed, "episode", i), Source::Real,
                               [&](const GridState& s) { return act(config, s, provider, planner); });
  });
  return make_set(config, std::move(episodes));
}

EpisodeSet collect_random_policy(const EnvConfig& config, std::size_t n, std::uint64_t seed,
                                 unsigned threads) {
  config.validate();
  if (n < 1) throw ConfigError("collect_random_policy: n must be >= 1");
  std::vector<Episode> episodes(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::uint64_t ep_seed = derive_seed(seed, "episode", i);
    Rng policy_rng(derive_seed(ep_seed, "policy"));
    episodes[i] = run_true_env(config, ep_seed, Source::Real, [&](const GridState&) {
      return kActions[uniform_index(policy_rng, kActions.size())];
    });
  });
  return make_set(config, std::move(episodes));
}

namespace {

Episode imagine_one(const EnvConfig& config, const EnsembleModel& model,
                    const ModelModeProvider& provider, const PlannerConfig& planner,
                    GridState start, InitMode init_mode, std::uint64_t seed) {
  Episode ep;
  ep.source = Source::Imagined;
  ep.seed = seed;
  ep.init_mode = init_mode;
  Rng rng(derive_seed(seed, "imagine"));
  GridState s = std::move(start);
  s.t = 0;

  // A hand-placed start can already be terminal; it is recorded as a
  // single step in which neither entity moves.
  if (s.agent == s.goal || s.agent == s.adversary) {
    const Action a = act(config, s, provider, planner);
    AgentPhase phase{s, 0.0, Status::Running};
    if (s.agent == s.adversary) {
      phase.reward = config.r_capture;
      phase.status = Status::Caught;
    } else {
      phase.reward = s.all_fuels_collected() ? config.r_goal_boosted : config.r_goal_base;
      phase.status = Status::GoalReached;
    }
    const StepResult r = finish_without_adversary(config, phase);
    ep.steps.push_back({s, a, r.reward});
    ep.final_state = r.next_state;
    ep.status = r.status;
    return ep;
  }

  Status status = Status::Running;
  while (status == Status::Running) {
    const Action a = act(config, s, provider, planner);
    const std::size_t member = uniform_index(rng, model.size());
    const auto [agent, adversary] = sample_next(predict(model, member, s, a), rng);
    const StepResult r = resolve_adversary_move(config, resolve_agent_move(config, s, agent), adversary);
    ep.steps.push_back({s, a, r.reward});
    s = r.next_state;
    status = r.status;
  }
  ep.final_state = s;
  ep.status = status;
  return ep;
}

}  // namespace

EpisodeSet imagine(const EnvConfig& config, const EnsembleModel& model,
                   const PlannerConfig& planner, std::size_t n, InitMode init_mode,
                   std::span<const GridState> init_states, std::uint64_t seed, unsigned threads) {
  config.validate();
  planner.validate();
  if (n < 1) throw ConfigError("imagine: n must be >= 1");
  if (model.members.empty()) throw UsageError("imagine: empty ensemble");
  if (init_mode != InitMode::Random && init_states.empty())
    throw UsageError(std::string("imagine: init mode '") + std::string(init_mode_name(init_mode)) +
                     "' requires initial states");
  const ModelModeProvider provider(model);
  std::vector<Episode> episodes(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::uint64_t ep_seed = derive_seed(seed, "episode", i);
    GridState start;
    if (init_mode == InitMode::Random) {
      Rng init_rng(ep_seed);
      start = sample_initial_state(config, init_rng);
    } else {
      start = init_states[i % init_states.size()];
    }
    episodes[i] = imagine_one(config, model, provider, planner, std::move(start), init_mode, ep_seed);
  });
  return make_set(config, std::move(episodes));
}

bool replays_exactly(const EnvConfig& config, const Episode& ep) {
  if (ep.source != Source::Real) return false;
  Env env(config, ep.seed);
  for (const EpisodeStep& s : ep.steps) {
    if (env.status() != Status::Running || !(env.state() == s.state)) return false;
    if (env.step(s.action).reward != s.reward) return false;
  }
  return env.status() == ep.status && env.state() == ep.final_state;
}

std::vector<Transition> transitions_from(const EpisodeSet& set) {
  std::vector<Transition> out;
  for (const Episode& ep : set.episodes) {
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const bool last = t + 1 == ep.steps.size();
      if (last && ep.status == Status::GoalReached) continue;
      const GridState& s = ep.steps[t].state;
      const GridState& n = ep.next_state(t);
      out.push_back({s.agent, s.adversary, ep.steps[t].action, n.agent, n.adversary});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON Lines episode files.
//
// Line 1 is a header object; each further line is one episode. Episode
// objects are written by hand so that field order and float formatting are
// fixed byte for byte.

namespace {

constexpr int kEpisodeFormatVersion = 1;

void write_cell(std::ostream& out, Cell c) { out << '[' << c.x << ',' << c.y << ']'; }

std::string_view status_code(Status s) { return status_name(s); }

Status status_from_code(const std::string& s) {
  if (s == "goal") return Status::GoalReached;
  if (s == "caught") return Status::Caught;
  if (s == "timeout") return Status::TimedOut;
  throw DataError("unknown status '" + s + "'");
}

InitMode init_mode_from_name(const std::string& s) {
  if (s == "random") return InitMode::Random;
  if (s == "by_hand") return InitMode::ByHand;
  if (s == "from_env") return InitMode::FromEnvObservation;
  throw DataError("unknown init_mode '" + s + "'");
}

Source source_from_name(const std::string& s) {
  if (s == "real") return Source::Real;
  if (s == "imagined") return Source::Imagined;
  throw DataError("unknown source '" + s + "'");
}

void write_episode(std::ostream& out, const Episode& ep) {
  const GridState& first = ep.steps.front().state;
  out << "{\"source\":\"" << source_name(ep.source) << "\",\"seed\":" << ep.seed
      << ",\"init_mode\":\"" << init_mode_name(ep.init_mode) << "\",\"status\":\""
      << status_code(ep.status) << "\",\"steps\":[";
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const EpisodeStep& s = ep.steps[t];
    if (t) out << ',';
    out << "{\"agent\":";
    write_cell(out, s.state.agent);
    out << ",\"adversary\":";
    write_cell(out, s.state.adversary);
    out << ",\"action\":\"" << action_code(s.action) << "\",\"reward\":" << format_double(s.reward)
        << '}';
  }
  out << "],\"goal\":";
  write_cell(out, first.goal);
  out << ",\"fuels\":[";
  for (std::size_t k = 0; k < first.fuels.size(); ++k) {
    if (k) out << ',';
    write_cell(out, first.fuels[k].cell);
  }
  // Step index during which each fuel was collected; -1 if it was already
  // collected in the first state, null if never.
  out << "],\"fuel_collected_at\":[";
  for (std::size_t k = 0; k < first.fuels.size(); ++k) {
    if (k) out << ',';
    if (first.fuels[k].collected) {
      out << -1;
      continue;
    }
    bool found = false;
    for (std::size_t t = 0; t < ep.steps.size() && !found; ++t) {
      if (ep.next_state(t).fuels[k].collected) {
        out << t;
        found = true;
      }
    }
    if (!found) out << "null";
  }
  out << "],\"final_agent\":";
  write_cell(out, ep.final_state.agent);
  out << ",\"final_adversary\":";
  write_cell(out, ep.final_state.adversary);
  out << "}\n";
}

Cell read_cell(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("cell must be [x, y]");
  return Cell{j[0].get<int>(), j[1].get<int>()};
}

Episode read_episode(const nlohmann::json& j) {
  Episode ep;
  ep.source = source_from_name(j.at("source").get<std::string>());
  ep.seed = j.at("seed").get<std::uint64_t>();
  ep.init_mode = init_mode_from_name(j.at("init_mode").get<std::string>());
  ep.status = status_from_code(j.at("status").get<std::string>());
  const Cell goal = read_cell(j.at("goal"));
  std::vector<Fuel> fuels;
  for (const auto& f : j.at("fuels")) fuels.push_back({read_cell(f), false});
  const auto& collected_at = j.at("fuel_collected_at");
  if (collected_at.size() != fuels.size()) throw DataError("fuel_collected_at length mismatch");
  std::vector<long long> when(fuels.size());
  for (std::size_t k = 0; k < fuels.size(); ++k)
    when[k] = collected_at[k].is_null() ? std::numeric_limits<long long>::max()
                                        : collected_at[k].get<long long>();

  const auto& steps = j.at("steps");
  if (steps.empty()) throw DataError("episode has no steps");
  auto state_at = [&](long long t) {
    GridState s;
    s.goal = goal;
    s.fuels = fuels;
    s.t = static_cast<int>(t);
    for (std::size_t k = 0; k < fuels.size(); ++k) s.fuels[k].collected = when[k] < t;
    return s;
  };
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto& js = steps[t];
    GridState s = state_at(static_cast<long long>(t));
    s.agent = read_cell(js.at("agent"));
    s.adversary = read_cell(js.at("adversary"));
    const std::string code = js.at("action").get<std::string>();
    if (code.size() != 1) throw DataError("action must be one of U, D, L, R");
    ep.steps.push_back({std::move(s), action_from_code(code[0]), js.at("reward").get<double>()});
  }
  ep.final_state = state_at(static_cast<long long>(steps.size()));
  ep.final_state.agent = read_cell(j.at("final_agent"));
  ep.final_state.adversary = read_cell(j.at("final_adversary"));
  return ep;
}

}  // namespace

void save_episodes(const EpisodeSet& set, std::ostream& out) {
  nlohmann::ordered_json header;
  header["format"] = "abm-episodes";
  header["version"] = kEpisodeFormatVersion;
  header["code_version"] = set.code_version;
  header["config_hash"] = set.config_hash;
  header["env"] = env_config_to_json(set.config);
  header["episodes"] = set.episodes.size();
  out << header.dump() << '\n';
  for (const Episode& ep : set.episodes) write_episode(out, ep);
}

void save_episodes(const EpisodeSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_episodes(set, out);
  if (!out) throw Error("failed writing " + path.string());
}

EpisodeSet load_episodes(std::istream& in) {
  EpisodeSet set;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  if (!std::getline(in, line)) throw ParseError("missing header line", 1);
  ++line_no;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format").get<std::string>() != "abm-episodes")
      throw ParseError("not an episode file", line_no);
    if (header.at("version").get<int>() != kEpisodeFormatVersion)
      throw ParseError("unsupported episode format version", line_no);
    set.code_version = header.at("code_version").get<std::string>();
    set.config_hash = header.at("config_hash").get<std::string>();
    set.config = env_config_from_json(header.at("env"));
    expected = header.at("episodes").get<std::size_t>();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad header: ") + e.what(), line_no);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      Episode ep = read_episode(nlohmann::json::parse(line));
      validate_episode(set.config, ep);
      set.episodes.push_back(std::move(ep));
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (set.episodes.size() != expected)
    throw ParseError("header announces " + std::to_string(expected) + " episodes, found " +
                         std::to_string(set.episodes.size()),
                     line_no + 1);
  return set;
}

EpisodeSet load_episodes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_episodes(in);
}

}  // namespace abm
