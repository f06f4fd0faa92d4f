#include "abm/config.hpp"

#include <fstream>
#include <set>

namespace abm {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, std::string_view section, std::set<std::string> known) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ConfigError("unknown key '" + key + "' in " + std::string(section));
}

template <typename T>
void read(const json& j, const char* key, T& out, std::string_view section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + key + " has the wrong type");
  }
}

nlohmann::ordered_json tree_params_to_json(const TreeParams& p) {
  nlohmann::ordered_json j;
  j["max_depth"] = p.max_depth;
  j["min_impurity_decrease"] = p.min_impurity_decrease;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["min_samples_split"] = p.min_samples_split;
  return j;
}

TreeParams tree_params_from_json(const json& j, std::string_view section) {
  reject_unknown(j, section,
                 {"max_depth", "min_impurity_decrease", "min_samples_leaf", "min_samples_split"});
  TreeParams p;
  read(j, "max_depth", p.max_depth, section);
  read(j, "min_impurity_decrease", p.min_impurity_decrease, section);
  read(j, "min_samples_leaf", p.min_samples_leaf, section);
  read(j, "min_samples_split", p.min_samples_split, section);
  return p;
}

}  // namespace

nlohmann::ordered_json env_config_to_json(const EnvConfig& c) {
  nlohmann::ordered_json j;
  j["grid_size"] = c.grid_size;
  j["n_fuels"] = c.n_fuels;
  j["eps_adv"] = c.eps_adv;
  j["r_fuel"] = c.r_fuel;
  j["r_goal_base"] = c.r_goal_base;
  j["r_goal_boosted"] = c.r_goal_boosted;
  j["r_capture"] = c.r_capture;
  j["t_max"] = c.t_max;
  j["min_initial_agent_adversary_distance"] = c.min_initial_agent_adversary_distance;
  return j;
}

EnvConfig env_config_from_json(const json& j) {
  reject_unknown(j, "env",
                 {"grid_size", "n_fuels", "eps_adv", "r_fuel", "r_goal_base", "r_goal_boosted",
                  "r_capture", "t_max", "min_initial_agent_adversary_distance"});
  EnvConfig c;
  read(j, "grid_size", c.grid_size, "env");
  read(j, "n_fuels", c.n_fuels, "env");
  read(j, "eps_adv", c.eps_adv, "env");
  read(j, "r_fuel", c.r_fuel, "env");
  read(j, "r_goal_base", c.r_goal_base, "env");
  read(j, "r_goal_boosted", c.r_goal_boosted, "env");
  read(j, "r_capture", c.r_capture, "env");
  read(j, "t_max", c.t_max, "env");
  read(j, "min_initial_agent_adversary_distance", c.min_initial_agent_adversary_distance, "env");
  return c;
}

void PipelineConfig::validate() const {
  env.validate();
  planner.validate();
  outcome_tree.validate();
  strategy_tree.validate();
  if (model.k < 1) throw ConfigError("model.k must be >= 1");
  if (!(model.alpha >= 0.0)) throw ConfigError("model.alpha must be >= 0");
  if (model.n_explore < 1) throw ConfigError("model.n_explore must be >= 1");
  if (data.n_real < 2) throw ConfigError("data.n_real must be >= 2");
  if (data.n_imagined < 1) throw ConfigError("data.n_imagined must be >= 1");
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0))
    throw ConfigError("data.test_fraction must lie in (0, 1)");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

PipelineConfig parse_config(const json& j) {
  reject_unknown(j, "config",
                 {"seed", "env", "model", "planner", "data", "tree", "output_dir", "threads"});
  if (!j.contains("seed")) throw ConfigError("config: the master 'seed' is mandatory");
  PipelineConfig c;
  read(j, "seed", c.seed, "config");
  if (j.contains("env")) c.env = env_config_from_json(j.at("env"));
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m, "model", {"k", "alpha", "n_explore"});
    read(m, "k", c.model.k, "model");
    read(m, "alpha", c.model.alpha, "model");
    read(m, "n_explore", c.model.n_explore, "model");
  }
  if (j.contains("planner")) {
    const json& p = j.at("planner");
    reject_unknown(p, "planner", {"horizon", "max_sequences"});
    read(p, "horizon", c.planner.horizon, "planner");
    read(p, "max_sequences", c.planner.max_sequences, "planner");
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown(d, "data", {"n_real", "n_imagined", "test_fraction", "imagined_init"});
    read(d, "n_real", c.data.n_real, "data");
    read(d, "n_imagined", c.data.n_imagined, "data");
    read(d, "test_fraction", c.data.test_fraction, "data");
    std::string init(init_mode_name(c.data.imagined_init));
    read(d, "imagined_init", init, "data");
    if (init == init_mode_name(InitMode::Random))
      c.data.imagined_init = InitMode::Random;
    else if (init == init_mode_name(InitMode::FromEnvObservation))
      c.data.imagined_init = InitMode::FromEnvObservation;
    else
      throw ConfigError("data.imagined_init must be \"random\" or \"from_env\", got \"" + init + "\"");
  }
  if (j.contains("tree")) {
    const json& t = j.at("tree");
    reject_unknown(t, "tree", {"outcome", "strategy"});
    if (t.contains("outcome")) c.outcome_tree = tree_params_from_json(t.at("outcome"), "tree.outcome");
    if (t.contains("strategy"))
      c.strategy_tree = tree_params_from_json(t.at("strategy"), "tree.strategy");
  }
  std::string out_dir = c.output_dir.string();
  read(j, "output_dir", out_dir, "config");
  c.output_dir = out_dir;
  read(j, "threads", c.threads, "config");
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["env"] = env_config_to_json(c.env);
  j["model"] = {{"k", c.model.k}, {"alpha", c.model.alpha}, {"n_explore", c.model.n_explore}};
  j["planner"] = {{"horizon", c.planner.horizon}, {"max_sequences", c.planner.max_sequences}};
  j["data"] = {{"n_real", c.data.n_real},
               {"n_imagined", c.data.n_imagined},
               {"test_fraction", c.data.test_fraction},
               {"imagined_init", std::string(init_mode_name(c.data.imagined_init))}};
  j["tree"] = {{"outcome", tree_params_to_json(c.outcome_tree)},
               {"strategy", tree_params_to_json(c.strategy_tree)}};
  return j;
}

std::string config_hash(const PipelineConfig& c) { return hex64(fnv1a(config_to_json(c).dump())); }

}  // namespace abm
