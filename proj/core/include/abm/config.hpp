#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "abm/env.hpp"
#include "abm/planner.hpp"
#include "abm/rollout.hpp"
#include "abm/tree.hpp"

namespace abm {

struct ModelConfig {
  int k = 5;
  double alpha = 1.0;
  std::size_t n_explore = 500;
};

struct DataConfig {
  std::size_t n_real = 2000;
  std::size_t n_imagined = 2000;
  double test_fraction = 0.2;
  // Random or FromEnvObservation (cycles the real episodes' first states).
  InitMode imagined_init = InitMode::Random;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  EnvConfig env;
  ModelConfig model;
  PlannerConfig planner;
  DataConfig data;
  TreeParams outcome_tree;
  TreeParams strategy_tree;
  // Not part of the config hash.
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;

  void validate() const;
};

nlohmann::ordered_json env_config_to_json(const EnvConfig& c);
EnvConfig env_config_from_json(const nlohmann::json& j);

/// Parses a config document. Missing sections take defaults; the master
/// seed is mandatory and unknown keys are rejected (ConfigError).
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical form covering every field that influences results.
nlohmann::ordered_json config_to_json(const PipelineConfig& c);

/// FNV-1a of the canonical form, as 16 hex digits.
std::string config_hash(const PipelineConfig& c);

}  // namespace abm
