#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "abm/env.hpp"
#include "abm/model.hpp"
#include "abm/planner.hpp"

namespace abm {

enum class Source : std::uint8_t { Real, Imagined };
enum class InitMode : std::uint8_t { Random, ByHand, FromEnvObservation };

std::string_view source_name(Source s);      // "real" | "imagined"
std::string_view init_mode_name(InitMode m);  // "random" | "by_hand" | "from_env"

struct EpisodeStep {
  GridState state;  // s_t
  Action action = Action::Up;
  double reward = 0.0;

  friend bool operator==(const EpisodeStep&, const EpisodeStep&) = default;
};

struct Episode {
  Source source = Source::Real;
  std::uint64_t seed = 0;
  InitMode init_mode = InitMode::Random;
  std::vector<EpisodeStep> steps;
  GridState final_state;
  Status status = Status::TimedOut;

  std::size_t length() const { return steps.size(); }
  /// s_{t+1} for step t.
  const GridState& next_state(std::size_t t) const {
    return t + 1 < steps.size() ? steps[t + 1].state : final_state;
  }

  friend bool operator==(const Episode&, const Episode&) = default;
};

struct EpisodeSet {
  std::vector<Episode> episodes;
  EnvConfig config;
  std::string config_hash;  // empty when produced outside the pipeline
  std::string code_version = std::string(kVersion);

  double success_rate() const;
  double mean_length() const;

  friend bool operator==(const EpisodeSet&, const EpisodeSet&) = default;
};

/// Throws DataError if the chaining, length or status invariants fail.
void validate_episode(const EnvConfig& config, const Episode& ep);

/// Planner acting in the true environment; it plans with the ensemble's
/// mode dynamics. Episode i uses derive_seed(seed, "episode", i).
EpisodeSet collect_real(const EnvConfig& config, const EnsembleModel& model,
                        const PlannerConfig& planner, std::size_t n, std::uint64_t seed,
                        unsigned threads = 1);

/// Uniform-random actions in the true environment.
EpisodeSet collect_random_policy(const EnvConfig& config, std::size_t n, std::uint64_t seed,
                                 unsigned threads = 1);

/// Rollouts entirely inside the learned model: the planner picks actions,
/// a uniformly drawn ensemble member is sampled for the next positions, and
/// the environment's reward rules are applied to the sampled positions.
/// ByHand / FromEnvObservation cycle through `init_states`.
EpisodeSet imagine(const EnvConfig& config, const EnsembleModel& model,
                   const PlannerConfig& planner, std::size_t n, InitMode init_mode,
                   std::span<const GridState> init_states, std::uint64_t seed,
                   unsigned threads = 1);

/// Re-executes the recorded actions under the true environment seeded with
/// the episode seed and reports whether states and rewards match exactly.
bool replays_exactly(const EnvConfig& config, const Episode& ep);

/// Model training data. The goal-reaching step is skipped because the
/// adversary does not move on it.
std::vector<Transition> transitions_from(const EpisodeSet& set);

void save_episodes(const EpisodeSet& set, std::ostream& out);
void save_episodes(const EpisodeSet& set, const std::filesystem::path& path);
EpisodeSet load_episodes(std::istream& in);
EpisodeSet load_episodes(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace abm
