#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "ferkit/experiments.hpp"
#include "ferkit/hashing.hpp"

namespace ferkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

std::optional<json> read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

ConfusionMatrix score(nn::Classifier& model, const DatasetManifest& test, int batch_size) {
  const auto idx = test.indices_in(Split::Test);
  if (idx.empty()) throw std::invalid_argument("test split is empty");
  const auto ev = evaluate(model, test, idx, batch_size);
  std::vector<Emotion> truth;
  for (auto i : idx) truth.push_back(test[i].label);
  return confusion(truth, ev.predictions);
}

template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

std::map<std::string, DatasetManifest> load_stages(const ExperimentConfig& config,
                                                   const std::vector<std::string>& stages) {
  std::map<std::string, DatasetManifest> out;
  for (const auto& stage : stages) {
    if (out.contains(stage)) continue;
    const auto it = config.manifests.find(stage);
    if (it == config.manifests.end()) throw ConfigError("no manifest configured for stage '" + stage + "'");
    if (!fs::exists(it->second)) throw ConfigError("manifest for stage '" + stage + "' not found: " + it->second.string());
    try {
      auto m = load_manifest(it->second);
      m.validate();
      out.emplace(stage, std::move(m));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("manifest for stage '" + stage + "' is invalid: " + e.what());
    }
  }
  return out;
}

ModelSpec model_for(const ExperimentConfig& c, Architecture a) { return {a, 7, false, c.width, c.seed}; }

TrainConfig train_for(const ExperimentConfig& c, const Flags& f) {
  TrainConfig t = c.train;
  t.augment = f.augment;
  t.weighted_sampler = f.sampler;
  return t;
}

void fill_cell(ResultCell& cell, const RunOutcome& run, std::size_t test_pos, const fs::path& runs_dir,
               const std::string& test_fp) {
  cell.ok = true;
  cell.run_id = run.run_id;
  cell.checkpoint = fs::relative(run.dir / "checkpoint.bin", runs_dir).generic_string();
  cell.train_fingerprint = run.checkpoint.manifest_fingerprint;
  cell.test_fingerprint = test_fp;
  cell.seed = run.checkpoint.config.seed;
  cell.best_epoch = run.checkpoint.epoch;
  cell.val_accuracy = run.checkpoint.val_accuracy;
  cell.confusion = run.test_confusion[test_pos];
  cell.accuracy = accuracy(cell.confusion);
}

}  // namespace

std::string run_id(const ModelSpec& model, const TrainConfig& train, const std::string& train_fingerprint) {
  const json key = {{"toolkit_version", std::string(kToolkitVersion)},
                    {"model", to_json(model)},
                    {"train", to_json(train)},
                    {"manifest", train_fingerprint}};
  return sha256_hex(key.dump()).substr(0, 16);
}

RunOutcome execute_run(const RunRequest& req, const fs::path& runs_dir) {
  if (!req.train_set) throw std::invalid_argument("execute_run: no training manifest");
  const std::string fp = req.train_set->fingerprint();
  RunOutcome out;
  out.run_id = run_id(req.model, req.train, fp);
  out.dir = runs_dir / out.run_id;
  const fs::path ckpt_path = out.dir / "checkpoint.bin";

  if (fs::exists(ckpt_path)) {
    try {
      Checkpoint c = load_checkpoint(ckpt_path);
      if (c.manifest_fingerprint == fp) {
        out.checkpoint = std::move(c);
        out.reused = true;
      }
    } catch (const std::exception& e) {
      spdlog::warn("run {}: discarding unreadable checkpoint ({})", out.run_id, e.what());
    }
  }
  if (!out.reused) {
    fs::create_directories(out.dir);
    const json run = {{"run_id", out.run_id},
                      {"model", to_json(req.model)},
                      {"train", to_json(req.train)},
                      {"manifest_fingerprint", fp}};
    write_text_atomic(out.dir / "run.json", run.dump(2) + "\n");
    std::ofstream log(out.dir / "epochs.jsonl", std::ios::trunc);
    auto result = train(*req.train_set, req.model, req.train,
                        [&](const EpochLog& e) { log << to_json(e).dump() << '\n' << std::flush; });
    save_checkpoint(result.best, ckpt_path);
    out.checkpoint = std::move(result.best);
  }

  std::unique_ptr<nn::Classifier> model;
  for (const auto& [name, test] : req.test_sets) {
    const std::string test_fp = test->fingerprint();
    const fs::path eval_path = out.dir / ("eval-" + sha256_hex(name + "|" + test_fp).substr(0, 16) + ".json");
    if (auto j = read_json(eval_path); j && j->value("test_fingerprint", "") == test_fp) {
      out.test_confusion.push_back(confusion_from_json(j->at("confusion")));
      continue;
    }
    if (!model) model = restore_model(out.checkpoint);
    const auto m = score(*model, *test, req.train.eval_batch_size);
    const json record = {{"test_set", name}, {"test_fingerprint", test_fp}, {"confusion", to_json(m)}};
    write_text_atomic(eval_path, record.dump(2) + "\n");
    out.test_confusion.push_back(m);
  }
  return out;
}

ResultsTable run_ablation_grid(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.ablation) throw ConfigError("config has no 'ablation' section");
  const auto& spec = *config.ablation;
  auto stages = spec.stages;
  if (!spec.test_stage.empty()) stages.push_back(spec.test_stage);
  const auto manifests = load_stages(config, stages);

  ResultsTable table;
  table.title = "Test accuracy by architecture and dataset stage";
  for (auto a : spec.architectures) table.rows.emplace_back(nn::architecture_name(a));
  for (const auto& stage : spec.stages) {
    for (const auto& f : spec.flags) table.cols.push_back(spec.flags.size() > 1 ? stage + "/" + flags_label(f) : stage);
  }
  struct Job {
    Architecture arch;
    std::string stage;
    Flags flags;
  };
  std::vector<Job> jobs;
  for (auto a : spec.architectures) {
    for (const auto& stage : spec.stages) {
      for (const auto& f : spec.flags) jobs.push_back({a, stage, f});
    }
  }
  table.cells.resize(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    table.cells[i].row = table.rows[i / table.cols.size()];
    table.cells[i].col = table.cols[i % table.cols.size()];
  }

  parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
    auto& cell = table.cells[i];
    const auto& job = jobs[i];
    const auto& test = manifests.at(spec.test_stage.empty() ? job.stage : spec.test_stage);
    try {
      RunRequest req{&manifests.at(job.stage), {{spec.test_stage.empty() ? job.stage : spec.test_stage, &test}},
                     model_for(config, job.arch), train_for(config, job.flags)};
      const auto run = execute_run(req, config.runs_dir);
      fill_cell(cell, run, 0, config.runs_dir, test.fingerprint());
      spdlog::info("cell {} x {}: {:.4f}{}", cell.row, cell.col, cell.accuracy, run.reused ? " (cached)" : "");
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
      spdlog::error("cell {} x {} failed: {}", cell.row, cell.col, e.what());
    }
  });
  return table;
}

ResultsTable run_cross_dataset(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.cross) throw ConfigError("config has no 'cross' section");
  const auto& spec = *config.cross;
  const auto manifests = load_stages(config, {spec.stage});
  const auto& base = manifests.at(spec.stage);

  std::map<std::string, DatasetManifest> views;
  for (const auto* list : {&spec.train, &spec.test}) {
    for (const auto& name : *list) {
      if (views.contains(name)) continue;
      views.emplace(name, name == "MERGED" ? base : base.filter_source(*parse_dataset(name)));
    }
  }

  ResultsTable table;
  table.title = "Cross-dataset test accuracy (rows: train set, columns: test set)";
  table.rows = spec.train;
  table.cols = spec.test;
  table.cells.resize(spec.train.size() * spec.test.size());
  for (std::size_t r = 0; r < spec.train.size(); ++r) {
    for (std::size_t c = 0; c < spec.test.size(); ++c) {
      table.cells[r * spec.test.size() + c].row = spec.train[r];
      table.cells[r * spec.test.size() + c].col = spec.test[c];
    }
  }

  parallel_for(spec.train.size(), options.jobs, [&](std::size_t r) {
    RunRequest req{&views.at(spec.train[r]), {}, model_for(config, spec.architecture), train_for(config, spec.flags)};
    for (const auto& t : spec.test) req.test_sets.emplace_back(t, &views.at(t));
    try {
      const auto run = execute_run(req, config.runs_dir);
      for (std::size_t c = 0; c < spec.test.size(); ++c) {
        auto& cell = table.cells[r * spec.test.size() + c];
        fill_cell(cell, run, c, config.runs_dir, views.at(spec.test[c]).fingerprint());
        spdlog::info("cell {} -> {}: {:.4f}", cell.row, cell.col, cell.accuracy);
      }
    } catch (const std::exception& e) {
      spdlog::error("train set {} failed: {}", spec.train[r], e.what());
      for (std::size_t c = 0; c < spec.test.size(); ++c) {
        auto& cell = table.cells[r * spec.test.size() + c];
        cell.ok = false;
        cell.error = e.what();
      }
    }
  });
  return table;
}

}  // namespace ferkit
