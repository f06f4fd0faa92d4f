#include "abm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "abm/behavior.hpp"
#include "abm/features.hpp"
#include "abm/model.hpp"
#include "abm/rollout.hpp"
#include "abm/tree.hpp"

namespace abm {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 8> kStageNames = {
    "train-model", "collect", "imagine", "featurize", "label", "fit-tree", "evaluate", "export-dot"};

// Writes through a temporary so that a crash never leaves a half-written
// artifact under the final name.
void write_file(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
}

void check_hash(const fs::path& path, const std::string& found, const std::string& expected) {
  if (found != expected)
    throw DataError(path.filename().string() + " was produced under config hash '" + found +
                    "', the current config hash is '" + expected + "'");
}

std::string outcome_label_name(int label) { return label == 1 ? "success" : "failure"; }

std::string label_name(std::string_view task, int label) {
  return task == "outcome" ? outcome_label_name(label) : strategy_name_for_label(label);
}

// ---------------------------------------------------------------------------
// CSV artifacts

std::string csv_preamble(const std::string& hash) {
  return "# config_hash=" + hash + " schema_hash=" + hex64(schema_hash()) + "\n";
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Reads one of our CSV artifacts, checking the provenance line.
CsvFile read_csv(const fs::path& path, const std::string& hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# config_hash=", 0) != 0)
    throw ParseError(path.filename().string() + ": missing provenance line", 1);
  const std::size_t sp = line.find(" schema_hash=");
  if (sp == std::string::npos)
    throw ParseError(path.filename().string() + ": missing schema hash", 1);
  check_hash(path, line.substr(14, sp - 14), hash);
  if (line.substr(sp + 13) != hex64(schema_hash()))
    throw DataError(path.filename().string() + " was written with a different feature schema");
  CsvFile f;
  if (!std::getline(in, line)) throw ParseError(path.filename().string() + ": missing header", 2);
  f.header = split_commas(line);
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    f.rows.push_back(split_commas(line));
    if (f.rows.back().size() != f.header.size())
      throw ParseError(path.filename().string() + ": expected " + std::to_string(f.header.size()) +
                           " columns, found " + std::to_string(f.rows.back().size()),
                       line_no);
  }
  return f;
}

double to_double(const std::string& s, const fs::path& path) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw DataError(path.filename().string() + ": bad number '" + s + "'");
  return v;
}

long long to_int(const std::string& s, const fs::path& path) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw DataError(path.filename().string() + ": bad integer '" + s + "'");
  return v;
}

struct FeatureTable {
  std::vector<std::int64_t> episode;
  std::vector<int> t;
  std::vector<double> x;  // row-major, kFeatureCount per row
  std::vector<int> strategy;  // empty when unlabeled

  std::size_t rows() const { return episode.size(); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * kFeatureCount, static_cast<std::size_t>(kFeatureCount)};
  }
};

std::string feature_csv_header(bool with_strategy) {
  std::string h = "episode_id,t";
  for (const FeatureSpec& f : schema()) h += "," + f.name;
  if (with_strategy) h += ",strategy";
  return h + "\n";
}

std::string write_feature_rows(const FeatureTable& table, const std::string& hash) {
  const bool labeled = !table.strategy.empty();
  std::string out = csv_preamble(hash) + feature_csv_header(labeled);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out += std::to_string(table.episode[r]);
    out += ',';
    out += std::to_string(table.t[r]);
    for (double v : table.row(r)) {
      out += ',';
      out += format_double(v);
    }
    if (labeled) {
      out += ',';
      out += std::to_string(table.strategy[r]);
    }
    out += '\n';
  }
  return out;
}

FeatureTable read_feature_table(const fs::path& path, const std::string& hash, bool labeled) {
  const CsvFile f = read_csv(path, hash);
  const std::string expected = feature_csv_header(labeled);
  std::string got;
  for (std::size_t i = 0; i < f.header.size(); ++i) got += (i ? "," : "") + f.header[i];
  if (got + "\n" != expected) {
    if (labeled && got + "\n" == feature_csv_header(false))
      throw DataError(path.filename().string() + " has no strategy column");
    throw DataError(path.filename().string() + ": header does not match the feature schema");
  }
  FeatureTable t;
  for (const auto& row : f.rows) {
    t.episode.push_back(to_int(row[0], path));
    t.t.push_back(static_cast<int>(to_int(row[1], path)));
    for (int k = 0; k < kFeatureCount; ++k) t.x.push_back(to_double(row[2 + static_cast<std::size_t>(k)], path));
    if (labeled) t.strategy.push_back(static_cast<int>(to_int(row.back(), path)));
  }
  return t;
}

struct OutcomeTable {
  std::vector<int> outcome;  // indexed by episode id
  std::vector<std::string> status;
};

OutcomeTable read_outcomes(const fs::path& path, const std::string& hash) {
  const CsvFile f = read_csv(path, hash);
  if (f.header != std::vector<std::string>{"episode_id", "outcome", "status"})
    throw DataError(path.filename().string() + ": unexpected header");
  OutcomeTable t;
  for (const auto& row : f.rows) {
    if (to_int(row[0], path) != static_cast<long long>(t.outcome.size()))
      throw DataError(path.filename().string() + ": episode ids must be 0..n-1 in order");
    t.outcome.push_back(static_cast<int>(to_int(row[1], path)));
    t.status.push_back(row[2]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Split

struct EpisodeSplit {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> test;
};

EpisodeSplit make_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  std::vector<std::int64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[uniform_index(rng, i)]);
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  EpisodeSplit s;
  s.test.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::uint64_t split_seed(std::uint64_t master) { return derive_seed(master, "split"); }

// Rows used by one task. Outcome: initial states only. Strategy: every step
// of successful episodes.
Dataset task_rows(std::string_view task, const FeatureTable& table, const OutcomeTable& outcomes,
                  const std::vector<bool>& keep_episode) {
  Dataset d(kFeatureCount);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto ep = static_cast<std::size_t>(table.episode[r]);
    if (ep >= outcomes.outcome.size()) throw DataError("feature row references unknown episode");
    if (!keep_episode[ep]) continue;
    if (task == "outcome") {
      if (table.t[r] == 0) d.add_row(table.row(r), outcomes.outcome[ep], table.episode[r]);
    } else if (outcomes.outcome[ep] == 1) {
      d.add_row(table.row(r), table.strategy[r], table.episode[r]);
    }
  }
  return d;
}

std::vector<bool> mask(std::size_t n, const std::vector<std::int64_t>& ids) {
  std::vector<bool> m(n, false);
  for (std::int64_t id : ids) m.at(static_cast<std::size_t>(id)) = true;
  return m;
}

struct StoredTree {
  DecisionTree tree;
  std::size_t train_rows = 0;
};

StoredTree read_tree(const fs::path& path, const std::string& hash) {
  const nlohmann::json j = read_json(path);
  if (!j.is_object() || !j.contains("config_hash") || !j.contains("tree"))
    throw DataError(path.filename().string() + " is not a tree artifact");
  check_hash(path, j.at("config_hash").get<std::string>(), hash);
  if (j.value("schema_hash", std::string{}) != hex64(schema_hash()))
    throw DataError(path.filename().string() + " was fitted on a different feature schema");
  StoredTree st;
  st.tree = tree_from_json(j.at("tree"));
  st.train_rows = j.value("train_rows", std::size_t{0});
  if (st.tree.n_features != static_cast<std::size_t>(kFeatureCount))
    throw DataError(path.filename().string() + " has the wrong feature width");
  return st;
}

EpisodeSet read_episodes(const fs::path& path, const std::string& hash) {
  EpisodeSet set = load_episodes(path);
  check_hash(path, set.config_hash, hash);
  return set;
}

ojson histogram_json(const std::vector<int>& labels) {
  ojson j = ojson::object();
  for (int k = 1; k <= kStrategyCount; ++k)
    j[std::to_string(k)] = std::count(labels.begin(), labels.end(), k);
  return j;
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string_view stage_name(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> stage_from_name(std::string_view name) {
  for (Stage s : kStages)
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

namespace artifacts {
std::string features(std::string_view source) { return "features_" + std::string(source) + ".csv"; }
std::string labeled(std::string_view source) { return "labeled_" + std::string(source) + ".csv"; }
std::string outcomes(std::string_view source) { return "outcomes_" + std::string(source) + ".csv"; }
std::string tree(std::string_view task, std::string_view source) {
  return "tree_" + std::string(task) + "_" + std::string(source) + ".json";
}
std::string conditions(std::string_view task, std::string_view source) {
  return "conditions_" + std::string(task) + "_" + std::string(source) + ".txt";
}
std::string dot(std::string_view task, std::string_view source) {
  return "tree_" + std::string(task) + "_" + std::string(source) + ".dot";
}
}  // namespace artifacts

std::uint64_t stage_seed(std::uint64_t master, Stage s) { return derive_seed(master, stage_name(s)); }

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  config_.validate();
  hash_ = config_hash(config_);
}

fs::path Pipeline::require(Stage stage, std::string_view name, Stage producer) const {
  const fs::path p = path(name);
  if (!fs::exists(p)) throw DependencyError(stage, p, producer);
  return p;
}

void Pipeline::run_all() {
  for (Stage s : kStages) run_stage(s);
}

void Pipeline::run_stage(Stage s) {
  current_ = s;
  const fs::path stale = path(artifacts::kStale);
  try {
    fs::create_directories(config_.output_dir);
    switch (s) {
      case Stage::TrainModel: train_model(); break;
      case Stage::Collect: collect(); break;
      case Stage::Imagine: imagine_stage(); break;
      case Stage::Featurize: featurize(); break;
      case Stage::Label: label(); break;
      case Stage::FitTree: fit_trees(); break;
      case Stage::Evaluate: evaluate(); break;
      case Stage::ExportDot: export_dots(); break;
    }
  } catch (const std::exception& e) {
    const auto* stage_error = dynamic_cast<const StageError*>(&e);
    const std::string what = stage_error ? e.what() : StageError(s, e.what()).what();
    std::string marker = "stage: " + std::string(stage_name(s)) + "\n" + "error: " + what + "\n" +
                         "outputs of this stage and every later stage are stale:";
    for (Stage later : kStages)
      if (static_cast<int>(later) >= static_cast<int>(s)) marker += " " + std::string(stage_name(later));
    marker += "\n";
    std::error_code ignored;
    fs::create_directories(config_.output_dir, ignored);
    std::ofstream(stale, std::ios::trunc) << marker;
    if (stage_error) throw;
    throw StageError(s, e.what());
  }
  // Clear a marker left by an earlier failure of this same stage.
  if (fs::exists(stale)) {
    const std::string text = read_file(stale);
    if (text.rfind("stage: " + std::string(stage_name(s)) + "\n", 0) == 0) fs::remove(stale);
  }
}

void Pipeline::train_model() {
  const std::uint64_t seed = stage_seed(config_.seed, Stage::TrainModel);
  EpisodeSet explore = collect_random_policy(config_.env, config_.model.n_explore,
                                             derive_seed(seed, "explore"), config_.threads);
  explore.config_hash = hash_;
  const std::vector<Transition> data = transitions_from(explore);
  EnsembleModel model = fit_ensemble(data, config_.model.k, config_.model.alpha,
                                     config_.env.grid_size, derive_seed(seed, "ensemble"));
  model.config_hash = hash_;
  std::ostringstream eps, mdl;
  save_episodes(explore, eps);
  save_model(model, mdl);
  write_file(path(artifacts::kExplore), eps.str());
  write_file(path(artifacts::kModel), mdl.str());
}

namespace {
EnsembleModel read_model(const fs::path& p, const std::string& hash) {
  EnsembleModel m = load_model(p);
  check_hash(p, m.config_hash, hash);
  return m;
}
}  // namespace

void Pipeline::collect() {
  const EnsembleModel model =
      read_model(require(Stage::Collect, artifacts::kModel, Stage::TrainModel), hash_);
  EpisodeSet real = collect_real(config_.env, model, config_.planner, config_.data.n_real,
                                 stage_seed(config_.seed, Stage::Collect), config_.threads);
  real.config_hash = hash_;
  std::ostringstream out;
  save_episodes(real, out);
  write_file(path(artifacts::kReal), out.str());
}

void Pipeline::imagine_stage() {
  const EnsembleModel model =
      read_model(require(Stage::Imagine, artifacts::kModel, Stage::TrainModel), hash_);
  std::vector<GridState> starts;
  if (config_.data.imagined_init == InitMode::FromEnvObservation) {
    // Only training-split episodes, so that test initial states stay unseen.
    const EpisodeSet real = read_episodes(require(Stage::Imagine, artifacts::kReal, Stage::Collect), hash_);
    const EpisodeSplit split =
        make_split(real.episodes.size(), config_.data.test_fraction, split_seed(config_.seed));
    for (std::int64_t id : split.train) {
      GridState s = real.episodes[static_cast<std::size_t>(id)].steps.front().state;
      starts.push_back(s);
    }
  }
  EpisodeSet imagined = imagine(config_.env, model, config_.planner, config_.data.n_imagined,
                                config_.data.imagined_init, starts,
                                stage_seed(config_.seed, Stage::Imagine), config_.threads);
  imagined.config_hash = hash_;
  std::ostringstream out;
  save_episodes(imagined, out);
  write_file(path(artifacts::kImagined), out.str());
}

void Pipeline::featurize() {
  for (std::string_view source : kSources) {
    const char* file = source == "real" ? artifacts::kReal : artifacts::kImagined;
    const Stage producer = source == "real" ? Stage::Collect : Stage::Imagine;
    const EpisodeSet set = read_episodes(require(Stage::Featurize, file, producer), hash_);
    FeatureTable table;
    for (std::size_t e = 0; e < set.episodes.size(); ++e)
      for (const EpisodeStep& st : set.episodes[e].steps) {
        const FeatureVector fv = extract(st.state);
        table.episode.push_back(static_cast<std::int64_t>(e));
        table.t.push_back(fv.t);
        table.x.insert(table.x.end(), fv.values.begin(), fv.values.end());
      }
    write_file(path(artifacts::features(source)), write_feature_rows(table, hash_));
  }
}

void Pipeline::label() {
  for (std::string_view source : kSources) {
    const char* file = source == "real" ? artifacts::kReal : artifacts::kImagined;
    const Stage producer = source == "real" ? Stage::Collect : Stage::Imagine;
    const EpisodeSet set = read_episodes(require(Stage::Label, file, producer), hash_);
    FeatureTable table = read_feature_table(
        require(Stage::Label, artifacts::features(source), Stage::Featurize), hash_, false);

    std::vector<std::vector<Strategy>> labels;
    std::string outcomes = csv_preamble(hash_) + "episode_id,outcome,status\n";
    for (std::size_t e = 0; e < set.episodes.size(); ++e) {
      const Episode& ep = set.episodes[e];
      labels.push_back(label_episode(ep));
      outcomes += std::to_string(e) + "," + std::to_string(static_cast<int>(outcome(ep))) + "," +
                  std::string(status_name(ep.status)) + "\n";
    }
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const auto e = static_cast<std::size_t>(table.episode[r]);
      const auto t = static_cast<std::size_t>(table.t[r]);
      if (e >= labels.size() || t >= labels[e].size())
        throw DataError(artifacts::features(source) + " does not match " + file);
      table.strategy.push_back(static_cast<int>(labels[e][t]));
    }
    write_file(path(artifacts::labeled(source)), write_feature_rows(table, hash_));
    write_file(path(artifacts::outcomes(source)), outcomes);
  }
}

void Pipeline::fit_trees() {
  std::map<std::string_view, FeatureTable> tables;
  std::map<std::string_view, OutcomeTable> outcomes;
  for (std::string_view source : kSources) {
    // The featurized CSV alone is not enough; its labels come from `label`.
    tables[source] = read_feature_table(
        require(Stage::FitTree, artifacts::labeled(source), Stage::Label), hash_, true);
    outcomes[source] =
        read_outcomes(require(Stage::FitTree, artifacts::outcomes(source), Stage::Label), hash_);
  }
  const std::size_t n_real = outcomes["real"].outcome.size();
  if (n_real < 2) throw DataError("need at least two real episodes to split");
  const EpisodeSplit split = make_split(n_real, config_.data.test_fraction, split_seed(config_.seed));
  ojson sj;
  sj["config_hash"] = hash_;
  sj["seed"] = split_seed(config_.seed);
  sj["test_fraction"] = config_.data.test_fraction;
  sj["train"] = split.train;
  sj["test"] = split.test;
  write_file(path(artifacts::kSplit), sj.dump(1) + "\n");

  const std::vector<std::string> names = schema_names();
  for (std::string_view task : kTasks)
    for (std::string_view source : kSources) {
      const std::size_t n = outcomes[source].outcome.size();
      const std::vector<bool> keep =
          source == "real" ? mask(n, split.train) : std::vector<bool>(n, true);
      const Dataset data = task_rows(task, tables[source], outcomes[source], keep);
      if (data.rows() == 0)
        throw DataError("no training rows for the " + std::string(task) + " tree on " +
                        std::string(source) + " data");
      const TreeParams& params = task == "outcome" ? config_.outcome_tree : config_.strategy_tree;
      const DecisionTree tree = fit_tree(data, params);

      ojson tj;
      tj["config_hash"] = hash_;
      tj["schema_hash"] = hex64(schema_hash());
      tj["task"] = task;
      tj["source"] = source;
      tj["train_rows"] = data.rows();
      tj["tree"] = tree_to_json(tree);
      write_file(path(artifacts::tree(task, source)), tj.dump(1) + "\n");

      std::string text = "# " + std::string(task) + " tree trained on " + std::string(source) +
                         " episodes, " + std::to_string(data.rows()) + " rows, config_hash=" +
                         hash_ + "\n";
      const auto name_of = [task](int l) { return label_name(task, l); };
      for (const Condition& c : conditions(tree, names)) text += c.describe(name_of) + "\n";
      write_file(path(artifacts::conditions(task, source)), text);
    }
}

void Pipeline::evaluate() {
  const FeatureTable real = read_feature_table(
      require(Stage::Evaluate, artifacts::labeled("real"), Stage::Label), hash_, true);
  const OutcomeTable real_outcomes =
      read_outcomes(require(Stage::Evaluate, artifacts::outcomes("real"), Stage::Label), hash_);
  const nlohmann::json sj = read_json(require(Stage::Evaluate, artifacts::kSplit, Stage::FitTree));
  check_hash(path(artifacts::kSplit), sj.value("config_hash", std::string{}), hash_);
  const auto test_ids = sj.at("test").get<std::vector<std::int64_t>>();
  const auto train_ids = sj.at("train").get<std::vector<std::int64_t>>();
  const std::vector<bool> test_mask = mask(real_outcomes.outcome.size(), test_ids);

  std::map<std::pair<std::string_view, std::string_view>, StoredTree> trees;
  for (std::string_view task : kTasks)
    for (std::string_view source : kSources)
      trees[{task, source}] =
          read_tree(require(Stage::Evaluate, artifacts::tree(task, source), Stage::FitTree), hash_);

  std::map<std::string_view, EpisodeSet> sets;
  sets["real"] = read_episodes(require(Stage::Evaluate, artifacts::kReal, Stage::Collect), hash_);
  sets["imagined"] =
      read_episodes(require(Stage::Evaluate, artifacts::kImagined, Stage::Imagine), hash_);

  ojson report;
  report["code_version"] = kVersion;
  report["config_hash"] = hash_;
  report["config"] = config_to_json(config_);

  ojson dataset;
  for (std::string_view source : kSources) {
    const EpisodeSet& set = sets[source];
    ojson d;
    d["episodes"] = set.episodes.size();
    d["success_rate"] = set.success_rate();
    d["mean_length"] = set.mean_length();
    std::map<std::string, std::size_t> by_status;
    for (const Episode& ep : set.episodes) ++by_status[std::string(status_name(ep.status))];
    d["status"] = by_status;
    if (source == "real") {
      d["train_episodes"] = train_ids.size();
      d["test_episodes"] = test_ids.size();
    }
    dataset[std::string(source)] = d;
  }
  report["dataset"] = dataset;

  ojson rows = ojson::array();
  std::vector<int> strategy_actual;
  std::map<std::string_view, std::vector<int>> strategy_predicted;
  for (std::string_view task : kTasks) {
    const Dataset test = task_rows(task, real, real_outcomes, test_mask);
    if (test.rows() == 0) throw DataError("the real test split has no " + std::string(task) + " rows");
    for (std::string_view source : kSources) {
      const StoredTree& st = trees[{task, source}];
      std::vector<int> predicted;
      predicted.reserve(test.rows());
      for (std::size_t r = 0; r < test.rows(); ++r) predicted.push_back(st.tree.predict(test.row(r)));
      const Metrics m = metrics(predicted, test.labels());
      ojson row;
      row["task"] = task;
      row["train_source"] = source;
      row["accuracy"] = m.accuracy;
      row["balanced_accuracy"] = m.balanced_accuracy;
      row["test_rows"] = test.rows();
      row["train_rows"] = st.train_rows;
      row["depth"] = st.tree.depth();
      row["leaves"] = st.tree.leaf_count();
      rows.push_back(row);
      if (task == "strategy") {
        strategy_actual = test.labels();
        strategy_predicted[source] = predicted;
      }
    }
  }
  report["rows"] = rows;

  ojson hist;
  hist["actual"] = histogram_json(strategy_actual);
  for (std::string_view source : kSources)
    hist["predicted_" + std::string(source)] = histogram_json(strategy_predicted[source]);
  report["strategy_frequencies"] = hist;

  ojson dots;
  for (std::string_view task : kTasks)
    for (std::string_view source : kSources)
      dots[std::string(task) + "_" + std::string(source)] = artifacts::dot(task, source);
  report["dot_files"] = dots;
  write_file(path(artifacts::kReportJson), report.dump(2) + "\n");

  // Human-readable rendering of the same numbers.
  std::string t;
  t += "abm report  (config " + hash_ + ", version " + std::string(kVersion) + ")\n\n";
  t += "Episodes\n";
  for (std::string_view source : kSources) {
    const ojson& d = dataset[std::string(source)];
    t += "  " + pad(std::string(source), 10) + std::to_string(d["episodes"].get<std::size_t>()) +
         " episodes, success " + fixed(d["success_rate"].get<double>(), 3) + ", mean length " +
         fixed(d["mean_length"].get<double>(), 2);
    if (source == "real")
      t += ", split " + std::to_string(train_ids.size()) + " train / " +
           std::to_string(test_ids.size()) + " test";
    t += "\n";
  }
  t += "\nAccuracy on the held-out real test split\n";
  t += "  " + pad("task", 10) + pad("trained on", 12) + pad("accuracy", 10) + pad("balanced", 10) +
       pad("rows", 8) + pad("depth", 7) + "leaves\n";
  for (const ojson& row : rows) {
    t += "  " + pad(row["task"].get<std::string>(), 10) +
         pad(row["train_source"].get<std::string>(), 12) +
         pad(fixed(row["accuracy"].get<double>()), 10) +
         pad(fixed(row["balanced_accuracy"].get<double>()), 10) +
         pad(std::to_string(row["test_rows"].get<std::size_t>()), 8) +
         pad(std::to_string(row["depth"].get<int>()), 7) +
         std::to_string(row["leaves"].get<std::size_t>()) + "\n";
  }
  t += "\nStrategy frequencies on the test split (successful episodes)\n";
  t += "  " + pad("label", 42) + pad("actual", 9) + pad("pred/real", 11) + "pred/imagined\n";
  for (int k = 1; k <= kStrategyCount; ++k) {
    const std::string key = std::to_string(k);
    t += "  " + pad(key + " " + strategy_name_for_label(k), 42) +
         pad(std::to_string(hist["actual"][key].get<long>()), 9) +
         pad(std::to_string(hist["predicted_real"][key].get<long>()), 11) +
         std::to_string(hist["predicted_imagined"][key].get<long>()) + "\n";
  }
  write_file(path(artifacts::kReportText), t);
}

void Pipeline::export_dots() {
  const std::vector<std::string> names = schema_names();
  for (std::string_view task : kTasks)
    for (std::string_view source : kSources) {
      const StoredTree st =
          read_tree(require(Stage::ExportDot, artifacts::tree(task, source), Stage::FitTree), hash_);
      const std::string dot = export_dot(
          st.tree, names, [task](int l) { return label_name(task, l); },
          std::string(task) + " tree, trained on " + std::string(source) +
              " episodes, config_hash=" + hash_);
      write_file(path(artifacts::dot(task, source)), dot);
    }
}

}  // namespace abm
