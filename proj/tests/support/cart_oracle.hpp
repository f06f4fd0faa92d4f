#pragma once

#include <algorithm>
#include <iterator>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "abm/tree.hpp"

namespace abm::testing {

// Enumerates every feature and every midpoint directly, counting the
// children from scratch for each candidate.
inline std::optional<Split> oracle_split(const Dataset& d, std::span<const std::size_t> rows,
                                         const TreeParams& p, std::span<const int> classes) {
  auto hist = [&](auto pred) {
    std::vector<std::size_t> h(classes.size(), 0);
    for (std::size_t r : rows)
      if (pred(r))
        ++h[static_cast<std::size_t>(std::find(classes.begin(), classes.end(), d.label(r)) -
                                     classes.begin())];
    return h;
  };
  const auto parent = hist([](std::size_t) { return true; });
  std::optional<Split> best;
  for (std::size_t f = 0; f < d.n_features(); ++f) {
    std::set<double> values;
    for (std::size_t r : rows) values.insert(d.value(r, f));
    for (auto it = values.begin(); it != values.end() && std::next(it) != values.end(); ++it) {
      const double thr = 0.5 * (*it + *std::next(it));
      const auto left = hist([&](std::size_t r) { return d.value(r, f) <= thr; });
      const auto right = hist([&](std::size_t r) { return d.value(r, f) > thr; });
      const auto nl = std::accumulate(left.begin(), left.end(), std::size_t{0});
      const auto nr = std::accumulate(right.begin(), right.end(), std::size_t{0});
      if (nl < static_cast<std::size_t>(p.min_samples_leaf) ||
          nr < static_cast<std::size_t>(p.min_samples_leaf))
        continue;
      const double dec = impurity_decrease(parent, left, right);
      const bool better = !best || dec > best->decrease ||
                          (dec == best->decrease &&
                           (f < best->feature || (f == best->feature && thr < best->threshold)));
      if (better) best = Split{f, thr, dec};
    }
  }
  if (!best || best->decrease < p.min_impurity_decrease) return std::nullopt;
  return best;
}

// Random dataset with at most 200 rows, 6 features and 4 labels. Even
// columns are small integers, odd columns binary.
inline Dataset random_dataset(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t rows = 2 + uniform_index(rng, 199);
  const std::size_t feats = 1 + uniform_index(rng, 6);
  const std::size_t labels = 2 + uniform_index(rng, 3);
  Dataset d(feats);
  std::vector<double> row(feats);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t f = 0; f < feats; ++f)
      row[f] = f % 2 == 0 ? static_cast<double>(uniform_index(rng, 8))
                          : static_cast<double>(uniform_index(rng, 2));
    // Labels loosely follow feature 0 so that splits carry signal.
    const int label =
        uniform01(rng) < 0.6 ? static_cast<int>(static_cast<std::size_t>(row[0]) % labels)
                             : static_cast<int>(uniform_index(rng, labels));
    d.add_row(row, label, static_cast<std::int64_t>(i));
  }
  return d;
}

// Training rows reaching each node of a fitted tree.
inline std::vector<std::vector<std::size_t>> rows_per_node(const DecisionTree& t, const Dataset& d) {
  std::vector<std::vector<std::size_t>> at(t.nodes.size());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    std::size_t i = 0;
    at[0].push_back(r);
    while (!t.nodes[i].is_leaf()) {
      const TreeNode& n = t.nodes[i];
      i = static_cast<std::size_t>(d.value(r, static_cast<std::size_t>(n.feature)) <= n.threshold
                                       ? n.left
                                       : n.right);
      at[i].push_back(r);
    }
  }
  return at;
}

}  // namespace abm::testing
