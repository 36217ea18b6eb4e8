#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ferkit/metrics.hpp"
#include "ferkit/training.hpp"

namespace ferkit {

/// Bad or inconsistent experiment configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  bool augment = false;
  bool sampler = false;
  friend bool operator==(const Flags&, const Flags&) = default;
};

/// "aug+smp", "aug", "smp" or "base".
std::string flags_label(const Flags& f);

struct AblationSpec {
  std::vector<Architecture> architectures;
  std::vector<std::string> stages;  // keys into ExperimentConfig::manifests
  /// Stage whose test split scores every cell; empty means each cell's own.
  std::string test_stage;
  std::vector<Flags> flags{Flags{}};
};

/// Train/test dataset names: "MERGED" (the whole manifest) or a source id
/// (FERPLUS, CKPLUS, KDEF, SYNTH) selecting that source's records.
struct CrossSpec {
  Architecture architecture = Architecture::ResNet18;
  std::string stage;
  std::vector<std::string> train;
  std::vector<std::string> test;
  Flags flags;
};

struct ExperimentConfig {
  std::filesystem::path data_root;
  std::filesystem::path runs_dir;
  std::uint64_t seed = 0;
  double width = 1.0;
  TrainConfig train;  // augment / weighted_sampler are set per cell
  std::map<std::string, std::filesystem::path> manifests;  // stage -> resolved path
  std::optional<AblationSpec> ablation;
  std::optional<CrossSpec> cross;
};

/// Parses the YAML config. Relative paths resolve against the config file's
/// directory, except that FERKIT_DATA_ROOT (when set) replaces data_root.
/// Throws ConfigError.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& yaml_text, const std::filesystem::path& base_dir);

struct ResultCell {
  std::string row;
  std::string col;
  bool ok = false;
  std::string error;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::string run_id;
  std::string checkpoint;  // relative to the runs dir
  std::string train_fingerprint;
  std::string test_fingerprint;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double val_accuracy = 0.0;
};

struct ResultsTable {
  std::string title;
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<ResultCell> cells;  // row-major over rows x cols

  const ResultCell* find(const std::string& row, const std::string& col) const;
  std::size_t failed() const;
};

nlohmann::json to_json(const ResultsTable& t);
ResultsTable results_from_json(const nlohmann::json& j);

struct RunOptions {
  int jobs = 1;
};

/// One cell per (architecture x stage x flags). Failed cells are recorded and
/// the grid continues; cells whose run directory already holds a valid result
/// are not retrained. Throws ConfigError when a manifest is missing or invalid.
ResultsTable run_ablation_grid(const ExperimentConfig& config, const RunOptions& options = {});

/// train x test matrix; one model per train set.
ResultsTable run_cross_dataset(const ExperimentConfig& config, const RunOptions& options = {});

/// Trains (or reuses) the run for one configuration and scores it on the
/// test split of `test`. Exposed for the `train` subcommand.
struct RunRequest {
  const DatasetManifest* train_set = nullptr;
  std::vector<std::pair<std::string, const DatasetManifest*>> test_sets;  // name, manifest
  ModelSpec model;
  TrainConfig train;
};
struct RunOutcome {
  std::string run_id;
  std::filesystem::path dir;
  Checkpoint checkpoint;
  std::vector<ConfusionMatrix> test_confusion;  // parallel to test_sets
  bool reused = false;
};
std::string run_id(const ModelSpec& model, const TrainConfig& train, const std::string& train_fingerprint);
RunOutcome execute_run(const RunRequest& request, const std::filesystem::path& runs_dir);

enum class RenderFormat { Text, Json, Csv, Heatmap, All };
std::optional<RenderFormat> parse_render_format(std::string_view s) noexcept;

/// Writes results.txt / results.json / results.csv / heatmaps/<cell>.png into
/// out_dir. Output depends only on the table. Returns the files written.
std::vector<std::filesystem::path> render(const ResultsTable& table, RenderFormat format,
                                          const std::filesystem::path& out_dir);
std::string render_text(const ResultsTable& table);
std::string render_csv(const ResultsTable& table);

}  // namespace ferkit
