// Command-line driver: `abm run` executes every stage, the per-stage
// subcommands execute one stage on the artifacts already in --out.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "abm/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::string stage;
};

abm::PipelineConfig resolve_config(const Options& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw abm::ConfigError("cannot open config file " + o.config_path);
    try {
      j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
      throw abm::ConfigError(o.config_path + ": " + e.what());
    }
    if (!j.is_object()) throw abm::ConfigError(o.config_path + ": top level must be an object");
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["output_dir"] = *o.out;
  if (o.threads) j["threads"] = *o.threads;
  return abm::parse_config(j);
}

void run_stage_logged(abm::Pipeline& p, abm::Stage s) {
  const auto start = std::chrono::steady_clock::now();
  p.run_stage(s);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "[abm] %-12s done in %.2f s\n", std::string(abm::stage_name(s)).c_str(), secs);
}

void print_report(const abm::Pipeline& p) {
  std::ifstream in(p.path(abm::artifacts::kReportText));
  if (in) std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competency analysis for a model-based planner in a pursuit-evasion gridworld"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(abm::kVersion));

  Options opts;
  auto add_common = [&opts](CLI::App* sub) {
    sub->add_option("--config,-c", opts.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Master seed (overrides the config)");
    sub->add_option("--out,-o", opts.out, "Output directory (overrides the config)");
    sub->add_option("--threads,-j", opts.threads, "Worker threads for episode generation");
  };

  CLI::App* run = app.add_subcommand("run", "Run every stage, or only --stage NAME");
  add_common(run);
  run->add_option("--stage", opts.stage, "Run a single stage")
      ->check(CLI::IsMember({"train-model", "collect", "imagine", "featurize", "label", "fit-tree",
                             "evaluate", "export-dot"}));

  std::vector<std::pair<CLI::App*, abm::Stage>> stage_commands;
  const std::pair<abm::Stage, const char*> descriptions[] = {
      {abm::Stage::TrainModel, "Explore with a random policy and fit the ensemble model"},
      {abm::Stage::Collect, "Collect real episodes with the planner"},
      {abm::Stage::Imagine, "Generate imagined episodes inside the model"},
      {abm::Stage::Featurize, "Write per-step feature matrices"},
      {abm::Stage::Label, "Attach strategy labels and episode outcomes"},
      {abm::Stage::FitTree, "Split the real episodes and fit the four trees"},
      {abm::Stage::Evaluate, "Score the trees on the real test split"},
      {abm::Stage::ExportDot, "Render the fitted trees as Graphviz DOT"},
  };
  for (const auto& [stage, text] : descriptions) {
    CLI::App* sub = app.add_subcommand(std::string(abm::stage_name(stage)), text);
    add_common(sub);
    stage_commands.emplace_back(sub, stage);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    abm::Pipeline pipeline(resolve_config(opts));
    std::fprintf(stderr, "[abm] config hash %s, output %s\n", pipeline.hash().c_str(),
                 pipeline.config().output_dir.string().c_str());
    if (run->parsed()) {
      if (opts.stage.empty()) {
        for (abm::Stage s : abm::kStages) run_stage_logged(pipeline, s);
        print_report(pipeline);
      } else {
        const abm::Stage s = *abm::stage_from_name(opts.stage);
        run_stage_logged(pipeline, s);
        if (s == abm::Stage::Evaluate) print_report(pipeline);
      }
    }
    for (const auto& [sub, stage] : stage_commands) {
      if (!sub->parsed()) continue;
      run_stage_logged(pipeline, stage);
      if (stage == abm::Stage::Evaluate) print_report(pipeline);
    }
  } catch (const abm::ConfigError& e) {
    std::fprintf(stderr, "abm: config error: %s\n", e.what());
    return kExitConfig;
  } catch (const abm::StageError& e) {
    std::fprintf(stderr, "abm: %s\n", e.what());
    return kExitStage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "abm: %s\n", e.what());
    return kExitStage;
  }
  return kExitOk;
}
