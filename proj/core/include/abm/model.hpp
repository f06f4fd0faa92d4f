#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abm/env.hpp"

namespace abm {

/// One observed agent/adversary transition. Goal and fuel positions are
/// deliberately absent: the learned dynamics never see them.
struct Transition {
  Cell agent;
  Cell adversary;
  Action action = Action::Up;
  Cell next_agent;
  Cell next_adversary;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Displacement between two cells, or throws DataError if it is not a unit
/// or zero move along one axis.
Move displacement(Cell from, Cell to);

/// Bit set of {at-min-x = 1, at-max-x = 2, at-min-y = 4, at-max-y = 8}.
int boundary_profile(int grid_size, Cell c);

inline constexpr int kProfiles = 16;
inline constexpr int kAgentContexts = 4 * kProfiles;
inline constexpr int kAdversaryContexts = 9 * kProfiles;

int agent_context(int grid_size, Cell agent, Action a);

/// The adversary acts after the agent, so its context is taken relative to
/// the agent's post-move cell: sign(dx), sign(dy) and boundary profile.
int adversary_context(int grid_size, Cell adversary, Cell agent_after_move);

using MoveCounts = std::array<std::uint32_t, 5>;

/// Smoothed count table for one ensemble member.
class DynamicsMember {
 public:
  DynamicsMember() = default;
  DynamicsMember(int grid_size, double alpha);

  void observe(const Transition& tr);

  MoveDistribution agent_probs(Cell agent, Action a) const;
  MoveDistribution adversary_probs(Cell adversary, Cell agent_after_move) const;

  const std::vector<MoveCounts>& agent_counts() const { return agent_counts_; }
  const std::vector<MoveCounts>& adversary_counts() const { return adversary_counts_; }
  std::vector<MoveCounts>& agent_counts() { return agent_counts_; }
  std::vector<MoveCounts>& adversary_counts() { return adversary_counts_; }

  int grid_size() const { return grid_size_; }
  double alpha() const { return alpha_; }

  friend bool operator==(const DynamicsMember&, const DynamicsMember&) = default;

 private:
  MoveDistribution normalized(const MoveCounts& counts, Cell at) const;

  int grid_size_ = 8;
  double alpha_ = 1.0;
  std::vector<MoveCounts> agent_counts_;
  std::vector<MoveCounts> adversary_counts_;
};

struct EnsembleModel {
  int grid_size = 8;
  double alpha = 1.0;
  std::vector<DynamicsMember> members;
  std::vector<std::uint64_t> member_seeds;
  std::string config_hash;  // provenance, empty when unknown

  std::size_t size() const { return members.size(); }

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

/// Categorical over the (at most five) cells reachable in one step, listed
/// in Move order. Out-of-grid entries carry probability zero.
struct CellDistribution {
  std::array<Cell, 5> cells{};
  std::array<double, 5> probs{};
};

struct NextStateDist {
  CellDistribution agent;
  CellDistribution adversary;
};

/// Bootstrap-ensemble fit. Each member sees a with-replacement resample of
/// the same size as `transitions`; member seeds derive from `seed`.
EnsembleModel fit_ensemble(std::span<const Transition> transitions, int k, double alpha,
                           int grid_size, std::uint64_t seed);

/// Next-state distribution from one member. The adversary factor is
/// conditioned on the agent factor's mode.
NextStateDist predict(const EnsembleModel& model, std::size_t member_index, const GridState& state,
                      Action a);

/// Mixture over all members with equal weights.
NextStateDist predict_mean(const EnsembleModel& model, const GridState& state, Action a);

std::pair<Cell, Cell> sample_next(const NextStateDist& dist, Rng& rng);
std::pair<Cell, Cell> mode_next(const NextStateDist& dist);

/// Mean pairwise total-variation distance between members' adversary
/// conditionals, averaged over contexts weighted by their training counts.
double ensemble_disagreement(const EnsembleModel& model);

double total_variation(const MoveDistribution& p, const MoveDistribution& q);

void save_model(const EnsembleModel& model, std::ostream& out);
void save_model(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_model(std::istream& in);
EnsembleModel load_model(const std::filesystem::path& path);

}  // namespace abm
