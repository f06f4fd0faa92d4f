#include "abm/features.hpp"

#include <algorithm>
#include <span>

namespace abm {
namespace {

constexpr std::array<const char*, kRoleEntities> kEntityNames = {
    "agent", "adversary", "goal", "fuel_ca", "fuel_cg", "fuel_fa"};

std::string distance_name(int i, int j) {
  return std::string("dist_") + kEntityNames[static_cast<std::size_t>(i)] + "_" +
         kEntityNames[static_cast<std::size_t>(j)];
}

// Distance slot -> entity pair, in slot order.
std::array<std::array<int, 2>, kDistanceFeatures> distance_pairs() {
  std::array<std::array<int, 2>, kDistanceFeatures> pairs{};
  int k = 0;
  for (int i = 0; i < kRoleEntities; ++i)
    for (int j = i + 1; j < kRoleEntities; ++j) pairs[static_cast<std::size_t>(k++)] = {i, j};
  return pairs;
}

FeatureSchema build_schema() {
  FeatureSchema s;
  s.reserve(kFeatureCount);
  for (const char* e : kEntityNames) {
    s.push_back({std::string(e) + "_x", FeatureKind::Coordinate});
    s.push_back({std::string(e) + "_y", FeatureKind::Coordinate});
  }
  const auto pairs = distance_pairs();
  for (const auto& [i, j] : pairs) s.push_back({distance_name(i, j), FeatureKind::Distance});
  for (int p = 0; p < kDistanceFeatures; ++p)
    for (int q = p + 1; q < kDistanceFeatures; ++q) {
      const auto& a = pairs[static_cast<std::size_t>(p)];
      const auto& b = pairs[static_cast<std::size_t>(q)];
      s.push_back({distance_name(a[0], a[1]) + "_gt_" + distance_name(b[0], b[1]),
                   FeatureKind::Binary});
    }
  return s;
}

// Lowest index wins ties; `better(d, best)` decides strict improvement.
template <typename Better>
std::optional<int> pick_fuel(const GridState& s, Cell anchor, Better better) {
  std::optional<int> best;
  int best_d = 0;
  for (std::size_t i = 0; i < s.fuels.size(); ++i) {
    if (s.fuels[i].collected) continue;
    const int d = manhattan(s.fuels[i].cell, anchor);
    if (!best || better(d, best_d)) {
      best = static_cast<int>(i);
      best_d = d;
    }
  }
  return best;
}

}  // namespace

const FeatureSchema& schema() {
  static const FeatureSchema s = build_schema();
  return s;
}

std::vector<std::string> schema_names() {
  std::vector<std::string> names;
  for (const FeatureSpec& f : schema()) names.push_back(f.name);
  return names;
}

std::uint64_t schema_hash() {
  std::string joined;
  for (const FeatureSpec& f : schema()) {
    joined += f.name;
    joined += '\n';
  }
  return fnv1a(joined);
}

int distance_slot(int i, int j) {
  // Row-major enumeration of the strict upper triangle.
  return i * (2 * kRoleEntities - i - 1) / 2 + (j - i - 1);
}

int comparison_slot(int p, int q) {
  return p * (2 * kDistanceFeatures - p - 1) / 2 + (q - p - 1);
}

RoleAssignment assign_roles(const GridState& state) {
  RoleAssignment r;
  r.fuel_ca = pick_fuel(state, state.agent, [](int d, int best) { return d < best; });
  r.fuel_cg = pick_fuel(state, state.goal, [](int d, int best) { return d < best; });
  r.fuel_fa = pick_fuel(state, state.adversary, [](int d, int best) { return d > best; });
  return r;
}

FeatureVector extract(const GridState& state) {
  const RoleAssignment roles = assign_roles(state);
  std::array<std::optional<Cell>, kRoleEntities> entity{};
  entity[0] = state.agent;
  entity[1] = state.adversary;
  entity[2] = state.goal;
  const std::array<std::optional<int>, 3> fuel_roles = {roles.fuel_ca, roles.fuel_cg, roles.fuel_fa};
  for (std::size_t k = 0; k < fuel_roles.size(); ++k)
    if (fuel_roles[k]) entity[3 + k] = state.fuels[static_cast<std::size_t>(*fuel_roles[k])].cell;

  FeatureVector fv;
  fv.t = state.t;
  auto& v = fv.values;
  for (int e = 0; e < kRoleEntities; ++e) {
    const auto& c = entity[static_cast<std::size_t>(e)];
    v[static_cast<std::size_t>(kCoordinateOffset + 2 * e)] = c ? c->x : kMissingCoordinate;
    v[static_cast<std::size_t>(kCoordinateOffset + 2 * e + 1)] = c ? c->y : kMissingCoordinate;
  }
  std::array<double, kDistanceFeatures> dist{};
  for (int i = 0; i < kRoleEntities; ++i)
    for (int j = i + 1; j < kRoleEntities; ++j) {
      const auto& a = entity[static_cast<std::size_t>(i)];
      const auto& b = entity[static_cast<std::size_t>(j)];
      dist[static_cast<std::size_t>(distance_slot(i, j))] =
          (a && b) ? manhattan(*a, *b) : kMissingDistance;
    }
  std::span<double> out_dist(v.data() + kDistanceOffset, kDistanceFeatures);
  std::copy(dist.begin(), dist.end(), out_dist.begin());
  for (int p = 0; p < kDistanceFeatures; ++p)
    for (int q = p + 1; q < kDistanceFeatures; ++q)
      v[static_cast<std::size_t>(kComparisonOffset + comparison_slot(p, q))] =
          dist[static_cast<std::size_t>(p)] > dist[static_cast<std::size_t>(q)] ? 1.0 : 0.0;
  return fv;
}

}  // namespace abm
