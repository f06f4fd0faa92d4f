// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Usage: abm_acceptance <default-config.json> <work-dir>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "abm/behavior.hpp"
#include "abm/config.hpp"
#include "abm/features.hpp"
#include "abm/model.hpp"
#include "abm/pipeline.hpp"
#include "abm/planner.hpp"
#include "abm/rollout.hpp"
#include "abm/tree.hpp"
#include "support/cart_oracle.hpp"
#include "support/crafted_episodes.hpp"
#include "support/planner_oracle.hpp"

namespace fs = std::filesystem;
using namespace abm;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(),
              v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- 3 ---------------------------------------------------------------------

Verdict cart_oracle() {
  std::size_t nodes_checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset d = testing::random_dataset(derive_seed(0xCA27, "dataset", seed));
    const TreeParams p{6, 1e-6, 1 + static_cast<int>(seed % 3), 2 + static_cast<int>(seed % 5)};
    const DecisionTree t = fit_tree(d, p);
    const auto at = testing::rows_per_node(t, d);
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const TreeNode& n = t.nodes[i];
      const auto want = testing::oracle_split(d, at[i], p, t.classes);
      const bool may_split = n.depth < p.max_depth &&
                             at[i].size() >= static_cast<std::size_t>(p.min_samples_split) &&
                             gini(n.counts) > 0.0;
      if (n.is_leaf()) {
        if (may_split && want)
          return {false, "dataset " + std::to_string(seed) + " node " + std::to_string(i) +
                             ": leaf where the oracle finds a split"};
        continue;
      }
      ++nodes_checked;
      if (!want || want->feature != static_cast<std::size_t>(n.feature) ||
          want->threshold != n.threshold || want->decrease != n.decrease)
        return {false, "dataset " + std::to_string(seed) + " node " + std::to_string(i) +
                           " differs from the exhaustive oracle"};
    }
  }
  return {true, "100 datasets, " + std::to_string(nodes_checked) + " internal nodes match exactly"};
}

// --- 4 ---------------------------------------------------------------------

Verdict planner_oracle() {
  const EnvConfig cfg;
  const StaticAdversaryProvider frozen(cfg);
  const PlannerConfig pc{5, 4096};
  int checked = 0;
  for (std::uint64_t i = 0; checked < 50; ++i) {
    GridState s = new_episode(cfg, derive_seed(0x91A7, "state", i));
    for (Fuel& f : s.fuels) f.collected = true;
    s.adversary = {-100, -100};  // removed from the board
    const int d = manhattan(s.agent, s.goal);
    if (d < 1 || d > 4) continue;
    ++checked;
    const PlanResult r = plan(cfg, s, frozen, pc);
    const double oracle = testing::brute_force_best(cfg, s, frozen, pc.horizon);
    if (r.best_return != oracle)
      return {false, "state " + std::to_string(i) + ": planner " + std::to_string(r.best_return) +
                         " vs brute force " + std::to_string(oracle)};
    GridState cur = s;
    int steps = 0;
    Status status = Status::Running;
    for (Action a : r.best_sequence) {
      const AgentPhase phase = resolve_agent_move(cfg, cur, agent_kinematics(cfg, cur.agent, a));
      const StepResult sr = phase.status == Status::Running
                                ? resolve_adversary_move(cfg, phase, cur.adversary)
                                : finish_without_adversary(cfg, phase);
      ++steps;
      status = sr.status;
      cur = sr.next_state;
      if (status != Status::Running) break;
    }
    if (status != Status::GoalReached || steps != d)
      return {false, "state " + std::to_string(i) + ": goal reached after " + std::to_string(steps) +
                         " steps, distance " + std::to_string(d)};
  }
  return {true, "50 states, H=5, returns equal brute force and goal reached in exactly d steps"};
}

// --- 5 ---------------------------------------------------------------------

std::vector<Transition> random_transitions(const EnvConfig& cfg, std::size_t n, std::uint64_t seed) {
  std::vector<Transition> out;
  std::size_t batch = 0;
  while (out.size() < n) {
    const EpisodeSet set = collect_random_policy(cfg, 200, derive_seed(seed, "batch", batch++));
    for (const Transition& tr : transitions_from(set)) {
      if (out.size() == n) break;
      out.push_back(tr);
    }
  }
  return out;
}

struct Calibration {
  double worst_member = 0.0;
  double worst_pooled = 0.0;  // single smoothed table over all data
  int contexts = 0;
  std::size_t smallest_context = 0;
};

Calibration calibrate(const EnvConfig& cfg, std::uint64_t seed) {
  const std::vector<Transition> data = random_transitions(cfg, 10000, derive_seed(seed, "data"));
  const EnsembleModel model = fit_ensemble(data, 5, 1.0, cfg.grid_size, derive_seed(seed, "fit"));
  DynamicsMember pooled(cfg.grid_size, 1.0);
  std::map<int, std::size_t> count;
  std::map<int, Transition> representative;
  for (const Transition& tr : data) {
    pooled.observe(tr);
    const int c = adversary_context(cfg.grid_size, tr.adversary, tr.next_agent);
    ++count[c];
    representative.emplace(c, tr);
  }
  Calibration cal;
  cal.smallest_context = SIZE_MAX;
  for (const auto& [c, n] : count) {
    if (n < 200) continue;
    ++cal.contexts;
    cal.smallest_context = std::min(cal.smallest_context, n);
    const Transition& tr = representative.at(c);
    const MoveDistribution truth = adversary_move_distribution(cfg, tr.adversary, tr.next_agent);
    for (const DynamicsMember& m : model.members)
      cal.worst_member = std::max(
          cal.worst_member, total_variation(m.adversary_probs(tr.adversary, tr.next_agent), truth));
    cal.worst_pooled = std::max(
        cal.worst_pooled, total_variation(pooled.adversary_probs(tr.adversary, tr.next_agent), truth));
  }
  return cal;
}

// --- 2, 8, 9 ---------------------------------------------------------------

struct Rows {
  std::vector<std::int64_t> episode;
  std::vector<int> t;
  std::vector<std::vector<double>> x;
  std::vector<int> strategy;
};

// Independent reader for the labeled feature CSV.
Rows read_labeled(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);  // provenance
  std::getline(in, line);  // header
  Rows r;
  while (std::getline(in, line)) {
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != static_cast<std::size_t>(kFeatureCount) + 3)
      throw std::runtime_error(p.filename().string() + ": unexpected width");
    r.episode.push_back(static_cast<std::int64_t>(cells.front()));
    r.t.push_back(static_cast<int>(cells[1]));
    r.strategy.push_back(static_cast<int>(cells.back()));
    r.x.emplace_back(cells.begin() + 2, cells.end() - 1);
  }
  return r;
}

std::vector<int> read_outcomes(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::vector<int> out;
  while (std::getline(in, line)) out.push_back(std::stoi(line.substr(line.find(',') + 1)));
  return out;
}

Verdict condition_faithfulness(const fs::path& out) {
  const auto split = nlohmann::json::parse(slurp(out / artifacts::kSplit));
  const auto train = split.at("train").get<std::vector<std::int64_t>>();
  const std::set<std::int64_t> train_set(train.begin(), train.end());
  const std::vector<std::string> names = schema_names();
  std::size_t checked = 0;
  for (auto source : kSources) {
    const Rows rows = read_labeled(out / artifacts::labeled(source));
    const std::vector<int> outcomes = read_outcomes(out / artifacts::outcomes(source));
    for (auto task : kTasks) {
      // Rebuild the training rows from the artifacts.
      std::vector<std::size_t> picked;
      std::vector<int> labels;
      for (std::size_t i = 0; i < rows.x.size(); ++i) {
        const std::int64_t ep = rows.episode[i];
        if (source == "real" && !train_set.count(ep)) continue;
        const int oc = outcomes.at(static_cast<std::size_t>(ep));
        if (task == "outcome" && rows.t[i] == 0) {
          picked.push_back(i);
          labels.push_back(oc);
        } else if (task == "strategy" && oc == 1) {
          picked.push_back(i);
          labels.push_back(rows.strategy[i]);
        }
      }
      const auto tj = nlohmann::json::parse(slurp(out / artifacts::tree(task, source)));
      const DecisionTree tree = tree_from_json(tj.at("tree"));
      std::size_t total = 0;
      for (const Condition& c : conditions(tree, names)) {
        std::vector<std::size_t> hist(tree.classes.size(), 0);
        std::size_t support = 0;
        for (std::size_t k = 0; k < picked.size(); ++k) {
          if (!c.matches(rows.x[picked[k]])) continue;
          ++support;
          const auto it = std::find(tree.classes.begin(), tree.classes.end(), labels[k]);
          if (it == tree.classes.end()) return {false, "label outside the tree's classes"};
          ++hist[static_cast<std::size_t>(it - tree.classes.begin())];
        }
        if (support != c.support || hist != c.counts)
          return {false, std::string(task) + "/" + std::string(source) + " leaf " +
                             std::to_string(c.leaf) + ": filter gives " + std::to_string(support) +
                             " rows, leaf support " + std::to_string(c.support)};
        total += support;
        ++checked;
      }
      if (total != picked.size()) return {false, "conditions do not cover the training set"};
    }
  }
  return {true, std::to_string(checked) + " conditions over 4 trees reproduce support and histogram"};
}

Verdict table_one(const fs::path& out) {
  const auto report = nlohmann::json::parse(slurp(out / artifacts::kReportJson));
  std::map<std::string, std::pair<double, double>> m;
  for (const auto& row : report.at("rows"))
    m[row.at("task").get<std::string>() + "/" + row.at("train_source").get<std::string>()] = {
        row.at("accuracy").get<double>(), row.at("balanced_accuracy").get<double>()};
  const std::pair<const char*, double> bands[] = {
      {"outcome/real", 0.80}, {"outcome/imagined", 0.78}, {"strategy/real", 0.68}, {"strategy/imagined", 0.65}};
  bool ok = true;
  std::string detail;
  for (const auto& [key, floor] : bands) {
    const auto [acc, bal] = m.at(key);
    const bool row_ok = acc >= floor;
    ok = ok && row_ok;
    detail += std::string(key) + " " + fmt("%.4f", acc) + (row_ok ? "" : " (below band)") + ", ";
  }
  for (const char* key : {"strategy/real", "strategy/imagined"}) {
    const auto [acc, bal] = m.at(key);
    const bool gap_ok = acc - bal >= 0.15;
    ok = ok && gap_ok;
    detail += std::string(key) + " balanced " + fmt("%.4f", bal) + (gap_ok ? "" : " (gap < 15 points)") + ", ";
  }
  const auto& ds = report.at("dataset");
  detail += "real success " + fmt("%.3f", ds.at("real").at("success_rate").get<double>()) +
            ", imagined success " + fmt("%.3f", ds.at("imagined").at("success_rate").get<double>());
  return {ok, detail};
}

Verdict determinism(const fs::path& a, const fs::path& b) {
  std::vector<std::string> files = {artifacts::kExplore, artifacts::kReal, artifacts::kImagined,
                                    artifacts::kModel, artifacts::kSplit, artifacts::kReportJson};
  for (auto src : kSources) {
    files.push_back(artifacts::features(src));
    files.push_back(artifacts::labeled(src));
    files.push_back(artifacts::outcomes(src));
  }
  for (auto task : kTasks)
    for (auto src : kSources) {
      files.push_back(artifacts::tree(task, src));
      files.push_back(artifacts::dot(task, src));
    }
  for (const std::string& f : files)
    if (slurp(a / f) != slurp(b / f)) return {false, f + " differs between runs"};
  return {true, std::to_string(files.size()) + " artifacts byte-identical across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <default-config.json> <work-dir>\n", argv[0]);
    return 2;
  }
  PipelineConfig base = load_config(argv[1]);
  const fs::path work = argv[2];
  fs::remove_all(work);
  const fs::path run_a = work / "run_a", run_b = work / "run_b";

  report(1, "feature count", [] {
    return Verdict{schema().size() == 132, "schema length " + std::to_string(schema().size())};
  });

  // The first full pipeline run also feeds criteria 8 and 9.
  bool ran_a = false;
  std::string run_error;
  report(2, "accuracy bands", [&] {
    try {
      PipelineConfig c = base;
      c.output_dir = run_a;
      Pipeline(c).run_all();
      ran_a = true;
    } catch (const std::exception& e) {
      run_error = e.what();
      return Verdict{false, "pipeline failed: " + run_error};
    }
    return table_one(run_a);
  });
  report(3, "CART oracle equivalence", cart_oracle);
  report(4, "planner oracle", planner_oracle);
  report(5, "world-model calibration", [&] {
    const Calibration cal = calibrate(base.env, derive_seed(base.seed, "calibration"));
    int passing = 0;
    for (std::uint64_t s = 0; s < 20; ++s)
      if (calibrate(base.env, derive_seed(base.seed, "calibration-survey", s)).worst_member <= 0.05)
        ++passing;
    return Verdict{cal.worst_member <= 0.05,
                   std::to_string(cal.contexts) + " contexts with >= 200 samples (smallest " +
                       std::to_string(cal.smallest_context) + "), worst member TV " +
                       fmt("%.4f", cal.worst_member) + ", tolerance 0.05; diagnostics: pooled fit " +
                       fmt("%.4f", cal.worst_pooled) + ", " + std::to_string(passing) +
                       "/20 other seeds within tolerance"};
  });
  report(6, "labelling hand traces", [] {
    std::string detail;
    bool ok = true;
    for (const auto& c : testing::crafted_cases()) {
      std::vector<int> got;
      for (Strategy s : label_episode(c.episode)) got.push_back(static_cast<int>(s));
      std::string seq;
      for (int l : got) seq += std::to_string(l);
      detail += std::string(c.name) + " [" + seq + "] ";
      ok = ok && got == c.labels;
    }
    return Verdict{ok, detail};
  });
  report(7, "imagination purity", [&] {
    const EnvConfig& cfg = base.env;
    const EnsembleModel model = fit_ensemble(random_transitions(cfg, 10000, 7), 5, 1.0, cfg.grid_size, 7);
    const std::uint64_t before = true_env_step_count();
    const EpisodeSet set = imagine(cfg, model, base.planner, 500, InitMode::Random, {}, 11);
    const std::uint64_t calls = true_env_step_count() - before;
    std::size_t steps = 0;
    for (const Episode& ep : set.episodes) steps += ep.length();
    return Verdict{calls == 0, std::to_string(calls) + " true-environment steps during " +
                                   std::to_string(set.episodes.size()) + " imagined episodes (" +
                                   std::to_string(steps) + " steps)"};
  });
  report(8, "determinism", [&] {
    if (!ran_a) return Verdict{false, "pipeline failed: " + run_error};
    PipelineConfig c = base;
    c.output_dir = run_b;
    Pipeline(c).run_all();
    return determinism(run_a, run_b);
  });
  report(9, "condition faithfulness", [&] {
    if (!ran_a) return Verdict{false, "pipeline failed: " + run_error};
    return condition_faithfulness(run_a);
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
