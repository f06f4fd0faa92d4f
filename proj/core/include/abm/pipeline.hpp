#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abm/common.hpp"
#include "abm/config.hpp"

namespace abm {

enum class Stage : int {
  TrainModel,
  Collect,
  Imagine,
  Featurize,
  Label,
  FitTree,
  Evaluate,
  ExportDot,
};

inline constexpr std::array<Stage, 8> kStages = {
    Stage::TrainModel, Stage::Collect,  Stage::Imagine,  Stage::Featurize,
    Stage::Label,      Stage::FitTree,  Stage::Evaluate, Stage::ExportDot,
};

std::string_view stage_name(Stage s);  // e.g. "train-model", "fit-tree"
std::optional<Stage> stage_from_name(std::string_view name);

/// A stage aborted. what() names the stage and the cause.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& cause)
      : Error("stage '" + std::string(stage_name(stage)) + "' failed: " + cause), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

/// An input artifact is missing; names the stage that produces it.
class DependencyError : public StageError {
 public:
  DependencyError(Stage stage, const std::filesystem::path& missing, Stage producer)
      : StageError(stage, "missing input " + missing.filename().string() +
                              " (run stage '" + std::string(stage_name(producer)) + "' first)"),
        producer_(producer) {}
  Stage producer() const noexcept { return producer_; }

 private:
  Stage producer_;
};

// Artifact file names, relative to the output directory.
namespace artifacts {
inline constexpr const char* kExplore = "explore.jsonl";
inline constexpr const char* kModel = "model.txt";
inline constexpr const char* kReal = "real.jsonl";
inline constexpr const char* kImagined = "imagined.jsonl";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kStale = "STALE";

std::string features(std::string_view source);  // features_<source>.csv
std::string labeled(std::string_view source);   // labeled_<source>.csv
std::string outcomes(std::string_view source);  // outcomes_<source>.csv
std::string tree(std::string_view task, std::string_view source);        // tree_<task>_<source>.json
std::string conditions(std::string_view task, std::string_view source);  // conditions_...txt
std::string dot(std::string_view task, std::string_view source);         // tree_<task>_<source>.dot
}  // namespace artifacts

inline constexpr std::array<std::string_view, 2> kTasks = {"outcome", "strategy"};
inline constexpr std::array<std::string_view, 2> kSources = {"real", "imagined"};

/// Seed for a stage: derive_seed(master, stage name).
std::uint64_t stage_seed(std::uint64_t master, Stage s);

/// Runs stages against the artifacts in config.output_dir. Every artifact
/// carries the config hash and is rejected when it differs from the
/// current one. A failing stage leaves a STALE marker naming itself.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const std::string& hash() const { return hash_; }
  std::filesystem::path path(std::string_view name) const { return config_.output_dir / name; }

  void run_stage(Stage s);
  /// All stages in order.
  void run_all();

 private:
  void train_model();
  void collect();
  void imagine_stage();
  void featurize();
  void label();
  void fit_trees();
  void evaluate();
  void export_dots();

  std::filesystem::path require(Stage stage, std::string_view name, Stage producer) const;

  PipelineConfig config_;
  std::string hash_;
  Stage current_ = Stage::TrainModel;
};

}  // namespace abm
