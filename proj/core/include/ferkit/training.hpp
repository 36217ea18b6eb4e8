#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ferkit/augment.hpp"
#include "ferkit/datasets.hpp"
#include "ferkit/nn/models.hpp"

namespace ferkit {

class WeightedSampler;

using nn::Architecture;
using nn::ModelSpec;

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int patience = 10;
  int eval_batch_size = 128;
  std::uint64_t seed = 0;
  bool augment = false;
  bool weighted_sampler = false;
  AugmentPolicy policy;

  /// Throws std::invalid_argument.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelSpec& s);
ModelSpec model_spec_from_json(const nlohmann::json& j);

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const EpochLog& e);

struct StateTensor {
  std::string name;
  nn::Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  ModelSpec model;
  TrainConfig config;
  std::string manifest_fingerprint;
  int epoch = 0;
  double val_accuracy = 0.0;
  std::vector<StateTensor> state;
};

/// Binary container: 8-byte magic, u64 header length, JSON header, then the
/// float32 payload of every tensor in header order.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<StateTensor> capture_state(const nn::Module& model);
/// Throws std::invalid_argument when names or shapes do not line up.
void load_state(nn::Module& model, std::span<const StateTensor> state);
std::unique_ptr<nn::Classifier> restore_model(const Checkpoint& ckpt);

/// [N, 1, 48, 48] tensor scaled to p / 127.5 - 1.
nn::Tensor to_batch(std::span<const Image* const> images);

/// Manifest indices in the order one training epoch visits them. Without the
/// sampler this is a seeded shuffle of the train split; with it, N_train
/// with-replacement draws.
std::vector<std::size_t> plan_epoch(const DatasetManifest& manifest, const TrainConfig& config,
                                    const WeightedSampler* sampler, int epoch);

/// The image fed to the network at `position` of `epoch`; rand_augment on a
/// stream derived from (seed, epoch, position) when config.augment is set.
Image training_view(const Image& pixels, const TrainConfig& config, int epoch, std::size_t position);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<Emotion> predictions;
};

Evaluation evaluate(nn::Classifier& model, const DatasetManifest& manifest, std::span<const std::size_t> indices,
                    int batch_size = 128);

/// Argmax of each logit row; ties go to the lowest index.
std::vector<Emotion> predict(nn::Classifier& model, std::span<const Image* const> images, int batch_size = 128);
std::vector<Emotion> predict(const Checkpoint& ckpt, std::span<const Image> images);

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> epochs;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Throws std::invalid_argument on empty train/val splits, or on a class
/// missing from train when the weighted sampler is on.
TrainResult train(const DatasetManifest& manifest, const ModelSpec& spec, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace ferkit
