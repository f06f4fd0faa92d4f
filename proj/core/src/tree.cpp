#include "abm/tree.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace abm {
namespace {

std::size_t class_index(std::span<const int> classes, int label) {
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label)
    throw UsageError("label " + std::to_string(label) + " is not in the class list");
  return static_cast<std::size_t>(it - classes.begin());
}

std::vector<int> sorted_classes(const Dataset& data) {
  std::vector<int> classes(data.labels().begin(), data.labels().end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

std::vector<std::size_t> histogram(const Dataset& data, std::span<const std::size_t> rows,
                                   std::span<const int> classes) {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (std::size_t r : rows) ++counts[class_index(classes, data.label(r))];
  return counts;
}

std::size_t majority(std::span<const std::size_t> counts) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k)
    if (counts[k] > counts[best]) best = k;
  return best;
}

std::string format_threshold(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

void Dataset::add_row(std::span<const double> features, int label, std::int64_t group) {
  if (features.size() != n_features_)
    throw UsageError("dataset row has " + std::to_string(features.size()) + " features, expected " +
                     std::to_string(n_features_));
  x_.insert(x_.end(), features.begin(), features.end());
  labels_.push_back(label);
  groups_.push_back(group);
}

void TreeParams::validate() const {
  if (max_depth < 0) throw ConfigError("tree.max_depth must be >= 0");
  if (!(min_impurity_decrease > 0.0)) throw ConfigError("tree.min_impurity_decrease must be > 0");
  if (min_samples_leaf < 1) throw ConfigError("tree.min_samples_leaf must be >= 1");
  if (min_samples_split < 2) throw ConfigError("tree.min_samples_split must be >= 2");
}

double gini(std::span<const std::size_t> counts) {
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  if (n == 0) throw UsageError("gini of an empty histogram");
  const double total = static_cast<double>(n);
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

double impurity_decrease(std::span<const std::size_t> parent, std::span<const std::size_t> left,
                         std::span<const std::size_t> right) {
  const auto total = [](std::span<const std::size_t> c) {
    return static_cast<double>(std::accumulate(c.begin(), c.end(), std::size_t{0}));
  };
  const double n = total(parent);
  return gini(parent) - total(left) / n * gini(left) - total(right) / n * gini(right);
}

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                const TreeParams& params, std::span<const int> classes) {
  if (rows.empty()) return std::nullopt;
  const std::vector<std::size_t> parent = histogram(data, rows, classes);
  const auto min_leaf = static_cast<std::size_t>(params.min_samples_leaf);
  const std::size_t n = rows.size();

  std::optional<Split> best;
  std::vector<std::pair<double, std::size_t>> column(n);
  std::vector<std::size_t> left(classes.size()), right(classes.size());
  for (std::size_t f = 0; f < data.n_features(); ++f) {
    for (std::size_t i = 0; i < n; ++i)
      column[i] = {data.value(rows[i], f), class_index(classes, data.label(rows[i]))};
    std::sort(column.begin(), column.end());
    std::fill(left.begin(), left.end(), 0);
    right = parent;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left[column[i].second];
      --right[column[i].second];
      if (column[i].first == column[i + 1].first) continue;
      const std::size_t n_left = i + 1;
      if (n_left < min_leaf || n - n_left < min_leaf) continue;
      const double d = impurity_decrease(parent, left, right);
      if (!best || d > best->decrease)
        best = Split{f, 0.5 * (column[i].first + column[i + 1].first), d};
    }
  }
  if (!best || best->decrease < params.min_impurity_decrease) return std::nullopt;
  return best;
}

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                const TreeParams& params) {
  const std::vector<int> classes = sorted_classes(data);
  return best_split(data, rows, params, classes);
}

std::size_t TreeNode::support() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t DecisionTree::leaf_of(std::span<const double> features) const {
  if (features.size() != n_features)
    throw UsageError("predict: row has " + std::to_string(features.size()) +
                     " features, tree expects " + std::to_string(n_features));
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    i = static_cast<std::size_t>(
        features[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return i;
}

int DecisionTree::predict(std::span<const double> features) const {
  return nodes[leaf_of(features)].label;
}

int DecisionTree::depth() const {
  int d = 0;
  for (const TreeNode& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

class Builder {
 public:
  Builder(const Dataset& data, const TreeParams& params, DecisionTree& tree)
      : data_(data), params_(params), tree_(tree) {}

  int grow(std::vector<std::size_t> rows, int depth) {
    TreeNode node;
    node.counts = histogram(data_, rows, tree_.classes);
    node.label = tree_.classes[majority(node.counts)];
    node.depth = depth;
    const auto index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);

    if (depth >= params_.max_depth) return index;
    if (rows.size() < static_cast<std::size_t>(params_.min_samples_split)) return index;
    if (gini(node.counts) == 0.0) return index;
    const std::optional<Split> split = best_split(data_, rows, params_, tree_.classes);
    if (!split) return index;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows)
      (data_.value(r, split->feature) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    TreeNode& self = tree_.nodes[static_cast<std::size_t>(index)];
    self.feature = static_cast<int>(split->feature);
    self.threshold = split->threshold;
    self.decrease = split->decrease;
    self.left = l;
    self.right = r;
    return index;
  }

 private:
  const Dataset& data_;
  const TreeParams& params_;
  DecisionTree& tree_;
};

}  // namespace

DecisionTree fit_tree(const Dataset& data, const TreeParams& params) {
  params.validate();
  if (data.rows() == 0) throw DataError("fit: empty dataset");
  DecisionTree tree;
  tree.classes = sorted_classes(data);
  tree.n_features = data.n_features();
  tree.params = params;
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Builder(data, params, tree).grow(std::move(rows), 0);
  return tree;
}

bool Condition::matches(std::span<const double> row) const {
  return std::all_of(predicates.begin(), predicates.end(),
                     [&](const Predicate& p) { return p.holds(row); });
}

std::string Condition::describe(const std::function<std::string(int)>& label_name) const {
  std::ostringstream out;
  out << "IF ";
  if (predicates.empty()) out << "(always)";
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    if (i) out << " AND ";
    out << predicates[i].name << (predicates[i].greater ? " > " : " <= ")
        << format_threshold(predicates[i].threshold);
  }
  char purity[16];
  std::snprintf(purity, sizeof purity, "%.3f", this->purity);
  out << " THEN " << label_name(label) << " (support " << support << ", purity " << purity << ")";
  return out.str();
}

std::vector<Condition> conditions(const DecisionTree& tree, std::span<const std::string> names) {
  if (names.size() != tree.n_features)
    throw UsageError("conditions: schema has " + std::to_string(names.size()) +
                     " names, tree expects " + std::to_string(tree.n_features));
  std::vector<Condition> out;
  std::vector<Predicate> path;
  const std::function<void(std::size_t)> walk = [&](std::size_t i) {
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) {
      Condition c;
      c.predicates = path;
      c.label = node.label;
      c.counts = node.counts;
      c.support = node.support();
      c.purity = c.support == 0 ? 0.0
                                : static_cast<double>(*std::max_element(c.counts.begin(), c.counts.end())) /
                                      static_cast<double>(c.support);
      c.leaf = i;
      out.push_back(std::move(c));
      return;
    }
    const auto f = static_cast<std::size_t>(node.feature);
    path.push_back({f, names[f], false, node.threshold});
    walk(static_cast<std::size_t>(node.left));
    path.back().greater = true;
    walk(static_cast<std::size_t>(node.right));
    path.pop_back();
  };
  walk(0);
  return out;
}

Metrics metrics(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size())
    throw UsageError("metrics: prediction and label counts differ");
  if (actual.empty()) throw DataError("metrics: no rows to score");
  std::map<int, std::pair<std::size_t, std::size_t>> per_label;  // label -> (hits, total)
  std::size_t hits = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    auto& [h, n] = per_label[actual[i]];
    ++n;
    if (predicted[i] == actual[i]) {
      ++h;
      ++hits;
    }
  }
  double recall_sum = 0.0;
  for (const auto& [label, hn] : per_label)
    recall_sum += static_cast<double>(hn.first) / static_cast<double>(hn.second);
  return {static_cast<double>(hits) / static_cast<double>(actual.size()),
          recall_sum / static_cast<double>(per_label.size())};
}

std::string export_dot(const DecisionTree& tree, std::span<const std::string> names,
                       const std::function<std::string(int)>& label_name,
                       const std::string& comment) {
  if (names.size() != tree.n_features)
    throw UsageError("export_dot: schema width does not match the tree");
  std::ostringstream out;
  out << "digraph tree {\n";
  if (!comment.empty()) out << "  // " << comment << "\n";
  out << "  node [shape=box, fontname=\"Helvetica\"];\n";
  out << "  edge [fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    out << "  n" << i << " [label=\"";
    if (n.is_leaf()) {
      const std::size_t support = n.support();
      const std::size_t top = *std::max_element(n.counts.begin(), n.counts.end());
      char purity[16];
      std::snprintf(purity, sizeof purity, "%.3f",
                    support ? static_cast<double>(top) / static_cast<double>(support) : 0.0);
      out << dot_escape(label_name(n.label)) << "\\nsupport = " << support
          << "\\npurity = " << purity << "\", style=rounded";
    } else {
      out << dot_escape(names[static_cast<std::size_t>(n.feature)]) << " ≤ "
          << format_threshold(n.threshold) << "\\nn = " << n.support() << "\"";
    }
    out << "];\n";
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    out << "  n" << i << " -> n" << n.left << " [label=\"yes\"];\n";
    out << "  n" << i << " -> n" << n.right << " [label=\"no\"];\n";
  }
  out << "}\n";
  return out.str();
}

nlohmann::json tree_to_json(const DecisionTree& tree) {
  nlohmann::json j;
  j["n_features"] = tree.n_features;
  j["classes"] = tree.classes;
  j["params"] = {{"max_depth", tree.params.max_depth},
                 {"min_impurity_decrease", tree.params.min_impurity_decrease},
                 {"min_samples_leaf", tree.params.min_samples_leaf},
                 {"min_samples_split", tree.params.min_samples_split}};
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : tree.nodes) {
    nlohmann::json node;
    node["depth"] = n.depth;
    node["counts"] = n.counts;
    node["label"] = n.label;
    if (!n.is_leaf()) {
      node["feature"] = n.feature;
      node["threshold"] = n.threshold;
      node["decrease"] = n.decrease;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  try {
    DecisionTree tree;
    tree.n_features = j.at("n_features").get<std::size_t>();
    tree.classes = j.at("classes").get<std::vector<int>>();
    const auto& p = j.at("params");
    tree.params.max_depth = p.at("max_depth").get<int>();
    tree.params.min_impurity_decrease = p.at("min_impurity_decrease").get<double>();
    tree.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    tree.params.min_samples_split = p.at("min_samples_split").get<int>();
    for (const auto& jn : j.at("nodes")) {
      TreeNode n;
      n.depth = jn.at("depth").get<int>();
      n.counts = jn.at("counts").get<std::vector<std::size_t>>();
      n.label = jn.at("label").get<int>();
      if (jn.contains("feature")) {
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.decrease = jn.at("decrease").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
      }
      tree.nodes.push_back(std::move(n));
    }
    const auto n_nodes = static_cast<int>(tree.nodes.size());
    if (n_nodes == 0) throw DataError("tree has no nodes");
    for (const TreeNode& n : tree.nodes) {
      if (n.is_leaf()) continue;
      if (n.left <= 0 || n.left >= n_nodes || n.right <= 0 || n.right >= n_nodes ||
          static_cast<std::size_t>(n.feature) >= tree.n_features)
        throw DataError("tree node references out of range");
    }
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tree JSON: ") + e.what());
  }
}

}  // namespace abm
