#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abm/env.hpp"

namespace abm {

// Six role entities: agent, adversary, goal and three fuel roles.
inline constexpr int kRoleEntities = 6;
inline constexpr int kDistanceFeatures = kRoleEntities * (kRoleEntities - 1) / 2;    // 15
inline constexpr int kComparisonFeatures = kDistanceFeatures * (kDistanceFeatures - 1) / 2;  // 105
inline constexpr int kFeatureCount = 2 * kRoleEntities + kDistanceFeatures + kComparisonFeatures;

inline constexpr double kMissingCoordinate = -1.0;
inline constexpr double kMissingDistance = 99.0;

enum class FeatureKind : std::uint8_t { Coordinate, Distance, Binary };

struct FeatureSpec {
  std::string name;
  FeatureKind kind;
};

using FeatureSchema = std::vector<FeatureSpec>;

/// Canonical ordering: 12 coordinates (x, y per entity), then the 15
/// pairwise distances over entity pairs (i < j), then the 105 comparisons
/// dist_p > dist_q over distance pairs (p < q).
const FeatureSchema& schema();
std::vector<std::string> schema_names();
std::uint64_t schema_hash();

/// Role indices into GridState::fuels, computed over uncollected fuels.
struct RoleAssignment {
  std::optional<int> fuel_ca;  // closest to agent
  std::optional<int> fuel_cg;  // closest to goal
  std::optional<int> fuel_fa;  // furthest from adversary

  friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

RoleAssignment assign_roles(const GridState& state);

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  int t = 0;
};

FeatureVector extract(const GridState& state);

/// Position of dist(entity i, entity j), i < j, within the distance block.
int distance_slot(int i, int j);
/// Position of [dist_p > dist_q], p < q, within the comparison block.
int comparison_slot(int p, int q);

inline constexpr int kCoordinateOffset = 0;
inline constexpr int kDistanceOffset = 2 * kRoleEntities;
inline constexpr int kComparisonOffset = kDistanceOffset + kDistanceFeatures;

}  // namespace abm
