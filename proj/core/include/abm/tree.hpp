#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "abm/common.hpp"

namespace abm {

/// Row-major design matrix with one integer label and one group id (the
/// episode) per row.
class Dataset {
 public:
  explicit Dataset(std::size_t n_features = 0) : n_features_(n_features) {}

  void add_row(std::span<const double> features, int label, std::int64_t group = 0);

  std::size_t rows() const { return labels_.size(); }
  std::size_t n_features() const { return n_features_; }
  std::span<const double> row(std::size_t i) const {
    return {x_.data() + i * n_features_, n_features_};
  }
  double value(std::size_t i, std::size_t f) const { return x_[i * n_features_ + f]; }
  int label(std::size_t i) const { return labels_[i]; }
  std::int64_t group(std::size_t i) const { return groups_[i]; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  std::size_t n_features_;
  std::vector<double> x_;
  std::vector<int> labels_;
  std::vector<std::int64_t> groups_;
};

struct TreeParams {
  int max_depth = 5;
  double min_impurity_decrease = 0.005;
  int min_samples_leaf = 20;
  int min_samples_split = 40;

  void validate() const;
};

/// 1 - sum_k p_k^2. Throws UsageError on an empty histogram.
double gini(std::span<const std::size_t> counts);

/// gini(parent) - n_L/n gini(L) - n_R/n gini(R).
double impurity_decrease(std::span<const std::size_t> parent, std::span<const std::size_t> left,
                         std::span<const std::size_t> right);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;
};

/// Best axis-aligned split of `rows` over midpoints between consecutive
/// distinct values. Ties keep the lowest feature, then the smallest
/// threshold. Splits leaving a child below min_samples_leaf are skipped;
/// returns nullopt when the best decrease is under min_impurity_decrease.
/// `classes` lists the label values (ascending) that index the histograms.
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                const TreeParams& params, std::span<const int> classes);
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                const TreeParams& params);

struct TreeNode {
  // Internal nodes: feature >= 0, rows with value <= threshold go left.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double decrease = 0.0;
  // Every node keeps its training histogram; leaves predict its majority.
  std::vector<std::size_t> counts;
  int label = 0;
  int depth = 0;

  bool is_leaf() const { return feature < 0; }
  std::size_t support() const;
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;  // preorder; nodes[0] is the root
  std::vector<int> classes;     // ascending label values
  std::size_t n_features = 0;
  TreeParams params;

  int predict(std::span<const double> features) const;
  /// Index of the leaf a row is routed to.
  std::size_t leaf_of(std::span<const double> features) const;
  int depth() const;
  std::size_t leaf_count() const;
};

/// Greedy recursive CART growth with Gini impurity. Deterministic; leaf
/// label is the majority class, ties to the smallest label.
DecisionTree fit_tree(const Dataset& data, const TreeParams& params);

struct Predicate {
  std::size_t feature = 0;
  std::string name;
  bool greater = false;  // false: value <= threshold
  double threshold = 0.0;

  bool holds(std::span<const double> row) const {
    return greater ? row[feature] > threshold : row[feature] <= threshold;
  }
};

/// A root-to-leaf path read as a conjunction.
struct Condition {
  std::vector<Predicate> predicates;
  int label = 0;
  std::size_t support = 0;
  double purity = 0.0;
  std::vector<std::size_t> counts;
  std::size_t leaf = 0;

  bool matches(std::span<const double> row) const;
  std::string describe(const std::function<std::string(int)>& label_name) const;
};

std::vector<Condition> conditions(const DecisionTree& tree, std::span<const std::string> names);

struct Metrics {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
};

/// Balanced accuracy is the unweighted mean recall over labels present in
/// `actual`.
Metrics metrics(std::span<const int> predicted, std::span<const int> actual);

std::string export_dot(const DecisionTree& tree, std::span<const std::string> names,
                       const std::function<std::string(int)>& label_name,
                       const std::string& comment = {});

nlohmann::json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

}  // namespace abm
