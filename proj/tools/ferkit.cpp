// ferkit command line: dataset materialisation, training and experiment grids.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ferkit/datasets.hpp"
#include "ferkit/experiments.hpp"
#include "ferkit/metrics.hpp"
#include "ferkit/preprocess.hpp"
#include "ferkit/training.hpp"

namespace fs = std::filesystem;
using namespace ferkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCellsFailed = 2;

bool on_off(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw CLI::ValidationError("expected 'on' or 'off', got '" + v + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void print_counts(const DatasetManifest& m) {
  std::string line;
  for (auto e : kAllEmotions) line += fmt::format(" {}={}", emotion_name(e), m.counts()[index_of(e)]);
  spdlog::info("{} samples, {} groups;{}", m.size(), m.group_count(), line);
  spdlog::info("splits: train={} val={} test={}", m.indices_in(Split::Train).size(), m.indices_in(Split::Val).size(),
               m.indices_in(Split::Test).size());
}

int finish_grid(const ResultsTable& table, const fs::path& out_dir) {
  for (const auto& p : render(table, RenderFormat::All, out_dir)) spdlog::info("wrote {}", p.string());
  const auto text = render_text(table);
  std::cout << text.substr(0, text.find("\n== "));
  if (table.failed() > 0) {
    spdlog::warn("{} of {} cells failed", table.failed(), table.cells.size());
    return kExitCellsFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ferkit: facial expression recognition toolkit"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a source dataset into a manifest");
  std::string source, input, out_path, poses = "S,HL,HR";
  std::optional<std::uint64_t> split_seed;
  ingest->add_option("--source", source, "ferplus|ckplus|kdef")->required();
  ingest->add_option("--input", input, "FER+ CSV or dataset root directory")->required();
  ingest->add_option("--out", out_path, "Manifest file to write")->required();
  ingest->add_option("--kdef-poses", poses, "Comma separated KDEF poses")->capture_default_str();
  ingest->add_option("--split-seed", split_seed, "Apply a group-aware 80/10/10 split");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic split manifest");
  int per_class = 100, domain = 0;
  std::uint64_t seed = 0;
  std::string synth_source = "SYNTH";
  double noise = 20.0;
  synth->add_option("--per-class", per_class)->capture_default_str();
  synth->add_option("--seed", seed)->capture_default_str();
  synth->add_option("--domain", domain, "Odd domains invert polarity")->capture_default_str();
  synth->add_option("--source", synth_source, "Source id stamped on the records")->capture_default_str();
  synth->add_option("--noise", noise, "Gaussian noise sigma")->capture_default_str();
  synth->add_option("--out", out_path)->required();

  // build-merged
  auto* merged = app.add_subcommand("build-merged", "Merge manifests and split by group");
  std::vector<std::string> inputs;
  std::uint64_t merge_seed = 0;
  merged->add_option("--inputs", inputs)->required();
  merged->add_option("--out", out_path)->required();
  merged->add_option("--split-seed", merge_seed)->capture_default_str();

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "Detect, align and mask; writes aligned, cropped and augmented merged");
  std::string manifest_path, detector_spec, cache_path, out_dir;
  int mask_w = 10, mask_h = 14;
  prep->add_option("--manifest", manifest_path)->required();
  prep->add_option("--cache", cache_path, "Detection sidecar (read and updated)")->required();
  prep->add_option("--detector", detector_spec, "fixture:PATH or external:COMMAND");
  prep->add_option("--out-dir", out_dir)->required();
  prep->add_option("--mask-width", mask_w)->capture_default_str();
  prep->add_option("--mask-height", mask_h)->capture_default_str();

  // train
  auto* trn = app.add_subcommand("train", "Train one model");
  std::string arch = "resnet18", augment = "off", sampler = "off";
  TrainConfig tc;
  double width = 1.0;
  trn->add_option("--manifest", manifest_path)->required();
  trn->add_option("--arch", arch)->capture_default_str();
  trn->add_option("--augment", augment, "on|off")->capture_default_str();
  trn->add_option("--sampler", sampler, "on|off")->capture_default_str();
  trn->add_option("--seed", tc.seed)->capture_default_str();
  trn->add_option("--out", out_dir, "Run directory")->required();
  trn->add_option("--epochs", tc.epochs)->capture_default_str();
  trn->add_option("--lr", tc.learning_rate)->capture_default_str();
  trn->add_option("--batch-size", tc.batch_size)->capture_default_str();
  trn->add_option("--patience", tc.patience)->capture_default_str();
  trn->add_option("--n-ops", tc.policy.n_ops)->capture_default_str();
  trn->add_option("--magnitude", tc.policy.magnitude)->capture_default_str();
  trn->add_option("--width", width, "Channel multiplier")->capture_default_str();

  // ablation / cross
  std::string config_path;
  int jobs = 1;
  auto* abl = app.add_subcommand("ablation", "Run the architecture x stage x flags grid");
  auto* crs = app.add_subcommand("cross", "Run the train-set x test-set matrix");
  for (auto* sub : {abl, crs}) {
    sub->add_option("--config", config_path)->required();
    sub->add_option("--jobs", jobs, "Cells trained concurrently")->capture_default_str();
    sub->add_option("--out", out_dir, "Report directory (default <runs_dir>/<subcommand>)");
  }

  // report
  auto* rep = app.add_subcommand("report", "Re-render a results.json");
  std::string results_path, format = "all";
  rep->add_option("--results", results_path)->required();
  rep->add_option("--format", format, "text|json|csv|heatmap|all")->capture_default_str();
  rep->add_option("--out", out_dir)->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*ingest) {
      LoadReport loaded;
      if (source == "ferplus") {
        loaded = load_ferplus(input);
      } else if (source == "ckplus") {
        loaded = load_ckplus(input);
      } else if (source == "kdef") {
        std::set<std::string> filter;
        std::stringstream ss(poses);
        for (std::string p; std::getline(ss, p, ',');) {
          if (!p.empty()) filter.insert(p);
        }
        loaded = load_kdef(input, filter);
      } else {
        spdlog::error("unknown source '{}'", source);
        return kExitConfig;
      }
      for (const auto& issue : loaded.issues) spdlog::warn("{}: {}", issue.location, issue.message);
      auto m = manifest_from_records(loaded.records);
      if (split_seed) m = split(m, {}, *split_seed);
      save_manifest(m, out_path);
      print_counts(m);
      return kExitOk;
    }
    if (*synth) {
      auto id = parse_dataset(synth_source);
      if (!id) {
        spdlog::error("unknown source id '{}'", synth_source);
        return kExitConfig;
      }
      auto m = split(synth_generate(per_class, seed, {domain, noise, *id}), {}, seed);
      save_manifest(m, out_path);
      print_counts(m);
      return kExitOk;
    }
    if (*merged) {
      std::vector<DatasetManifest> parts;
      for (const auto& p : inputs) parts.push_back(load_manifest(p));
      auto m = split(merge(parts), {}, merge_seed);
      save_manifest(m, out_path);
      print_counts(m);
      return kExitOk;
    }
    if (*prep) {
      const auto m = load_manifest(manifest_path);
      DetectionCache cache = fs::exists(cache_path) ? DetectionCache::load(cache_path) : DetectionCache{};
      std::unique_ptr<FaceDetector> detector = detector_spec.empty() ? nullptr : make_detector(detector_spec);
      populate_cache(m, detector.get(), cache);
      cache.save(cache_path);
      const MaskSize mask{mask_w, mask_h};
      auto outs = preprocess_variants(m, cache, mask);
      const fs::path dir(out_dir);
      save_manifest(outs.aligned, dir / "aligned.csv");
      save_manifest(outs.cropped, dir / "cropped.csv");
      const auto aug = build_augmented_merged(m, cache, mask, m.info().seed.value_or(0));
      save_manifest(aug, dir / "augmented_merged.csv");
      std::string discards = "group_id,variant,reason\n";
      for (const auto& d : outs.discarded) {
        discards += fmt::format("{},{},{}\n", d.group_id, variant_name(d.variant), d.reason);
      }
      write_text(dir / "discarded.csv", discards);
      spdlog::info("aligned {} / cropped {} / augmented merged {} / discarded {}", outs.aligned.size(),
                   outs.cropped.size(), aug.size(), outs.discarded.size());
      return kExitOk;
    }
    if (*trn) {
      auto a = nn::parse_architecture(arch);
      if (!a) {
        spdlog::error("unknown architecture '{}'", arch);
        return kExitConfig;
      }
      tc.augment = on_off(augment);
      tc.weighted_sampler = on_off(sampler);
      const auto m = load_manifest(manifest_path);
      const ModelSpec spec{*a, 7, false, width, tc.seed};
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      write_text(dir / "run.json", nlohmann::json{{"model", to_json(spec)},
                                                  {"train", to_json(tc)},
                                                  {"manifest", fs::absolute(manifest_path).string()},
                                                  {"manifest_fingerprint", m.fingerprint()}}
                                           .dump(2) +
                                       "\n");
      std::ofstream log(dir / "epochs.jsonl", std::ios::trunc);
      auto result = train(m, spec, tc, [&](const EpochLog& e) { log << to_json(e).dump() << '\n' << std::flush; });
      save_checkpoint(result.best, dir / "checkpoint.bin");
      spdlog::info("best epoch {} val accuracy {:.4f}{}", result.best.epoch, result.best.val_accuracy,
                   result.stopped_early ? " (early stop)" : "");
      const auto test_idx = m.indices_in(Split::Test);
      if (!test_idx.empty()) {
        auto model = restore_model(result.best);
        const auto ev = evaluate(*model, m, test_idx, tc.eval_batch_size);
        std::vector<Emotion> truth;
        for (auto i : test_idx) truth.push_back(m[i].label);
        const auto cm = confusion(truth, ev.predictions);
        const auto r = report(cm);
        write_text(dir / "test_metrics.json",
                   nlohmann::json{{"confusion", to_json(cm)}, {"report", to_json(r)}}.dump(2) + "\n");
        write_text(dir / "test_report.txt", render_report_text(r) + "\n" + render_confusion_text(cm));
        std::cout << render_report_text(r);
      }
      return kExitOk;
    }
    if (*abl || *crs) {
      ExperimentConfig cfg;
      try {
        cfg = load_experiment_config(config_path);
      } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
      }
      const RunOptions opts{jobs};
      const auto table = *abl ? run_ablation_grid(cfg, opts) : run_cross_dataset(cfg, opts);
      const fs::path dest = out_dir.empty() ? cfg.runs_dir / (*abl ? "ablation" : "cross") : fs::path(out_dir);
      return finish_grid(table, dest);
    }
    if (*rep) {
      auto f = parse_render_format(format);
      if (!f) {
        spdlog::error("unknown format '{}'", format);
        return kExitConfig;
      }
      std::ifstream in(results_path);
      if (!in) {
        spdlog::error("cannot read {}", results_path);
        return kExitConfig;
      }
      const auto table = results_from_json(nlohmann::json::parse(in));
      for (const auto& p : render(table, *f, out_dir)) spdlog::info("wrote {}", p.string());
      return table.failed() ? kExitCellsFailed : kExitOk;
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
