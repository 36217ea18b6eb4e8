#include <chrono>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "ferkit/nn/adam.hpp"
#include "ferkit/nn/ops.hpp"
#include "ferkit/sampling.hpp"
#include "ferkit/training.hpp"

namespace ferkit {

namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566;
constexpr std::uint64_t kSamplerStream = 0x73616d70;
constexpr std::uint64_t kAugmentStream = 0x61756720;

int argmax_row(std::span<const float> row) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(row.size()); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

struct BatchStats {
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::size_t seen = 0;

  void add(const nn::Tensor& logits, float mean_loss, std::span<const int> labels) {
    const int k = logits.dim(1);
    for (std::size_t b = 0; b < labels.size(); ++b) {
      if (argmax_row(logits.data().subspan(b * k, k)) == labels[b]) ++correct;
    }
    loss_sum += static_cast<double>(mean_loss) * static_cast<double>(labels.size());
    seen += labels.size();
  }
  double loss() const { return seen ? loss_sum / static_cast<double>(seen) : 0.0; }
  double accuracy() const { return seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0; }
};

// Batch boundaries over n items; a trailing batch of one is folded into the
// previous batch so batch-norm always sees more than one sample.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t lo = 0; lo < n; lo += batch) out.emplace_back(lo, std::min(n, lo + batch));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

}  // namespace

nn::Tensor to_batch(std::span<const Image* const> images) {
  const int n = static_cast<int>(images.size());
  std::vector<float> v;
  v.reserve(static_cast<std::size_t>(n) * kSampleSide * kSampleSide);
  for (const Image* img : images) {
    if (!img->is_canonical()) throw std::invalid_argument("to_batch: images must be 48x48 grayscale");
    for (auto p : img->pixels()) v.push_back(static_cast<float>(p) / 127.5f - 1.0f);
  }
  return nn::Tensor::from({n, 1, kSampleSide, kSampleSide}, std::move(v));
}

std::vector<std::size_t> plan_epoch(const DatasetManifest& manifest, const TrainConfig& config,
                                    const WeightedSampler* sampler, int epoch) {
  auto train = manifest.indices_in(Split::Train);
  const auto e = static_cast<std::uint64_t>(epoch);
  if (!sampler) {
    Rng rng = Rng::derive(config.seed, {kShuffleStream, e});
    rng.shuffle(std::span<std::size_t>(train));
    return train;
  }
  if (sampler->size() != train.size()) throw std::invalid_argument("plan_epoch: sampler does not match train split");
  Rng rng = Rng::derive(config.seed, {kSamplerStream, e});
  std::vector<std::size_t> order;
  order.reserve(train.size());
  for (auto pos : sampler->draw(train.size(), rng)) order.push_back(train[pos]);
  return order;
}

Image training_view(const Image& pixels, const TrainConfig& config, int epoch, std::size_t position) {
  if (!config.augment) return pixels;
  Rng rng = Rng::derive(config.seed, {kAugmentStream, static_cast<std::uint64_t>(epoch), position});
  return rand_augment(pixels, config.policy, rng);
}

Evaluation evaluate(nn::Classifier& model, const DatasetManifest& manifest, std::span<const std::size_t> indices,
                    int batch_size) {
  nn::NoGradGuard no_grad;
  Evaluation ev;
  BatchStats stats;
  for (auto [lo, hi] : batch_ranges(indices.size(), static_cast<std::size_t>(batch_size))) {
    std::vector<const Image*> imgs;
    std::vector<int> labels;
    for (std::size_t i = lo; i < hi; ++i) {
      imgs.push_back(&manifest[indices[i]].pixels);
      labels.push_back(static_cast<int>(index_of(manifest[indices[i]].label)));
    }
    nn::Tensor logits = model.forward(to_batch(imgs), false);
    nn::Tensor loss = nn::cross_entropy(logits, labels);
    stats.add(logits, loss.data()[0], labels);
    const int k = logits.dim(1);
    for (std::size_t b = 0; b < labels.size(); ++b) {
      ev.predictions.push_back(*emotion_from_index(argmax_row(logits.data().subspan(b * k, k))));
    }
  }
  ev.loss = stats.loss();
  ev.accuracy = stats.accuracy();
  return ev;
}

std::vector<Emotion> predict(nn::Classifier& model, std::span<const Image* const> images, int batch_size) {
  nn::NoGradGuard no_grad;
  std::vector<Emotion> out;
  for (std::size_t lo = 0; lo < images.size(); lo += static_cast<std::size_t>(batch_size)) {
    const std::size_t hi = std::min(images.size(), lo + static_cast<std::size_t>(batch_size));
    nn::Tensor logits = model.forward(to_batch(images.subspan(lo, hi - lo)), false);
    const int k = logits.dim(1);
    for (std::size_t b = 0; b < hi - lo; ++b) {
      out.push_back(*emotion_from_index(argmax_row(logits.data().subspan(b * k, k))));
    }
  }
  return out;
}

std::vector<Emotion> predict(const Checkpoint& ckpt, std::span<const Image> images) {
  auto model = restore_model(ckpt);
  std::vector<const Image*> ptrs;
  for (const auto& img : images) ptrs.push_back(&img);
  return predict(*model, ptrs, ckpt.config.eval_batch_size);
}

TrainResult train(const DatasetManifest& manifest, const ModelSpec& spec, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  spec.validate();
  const auto train_idx = manifest.indices_in(Split::Train);
  const auto val_idx = manifest.indices_in(Split::Val);
  if (train_idx.empty()) throw std::invalid_argument("train: the train split is empty");
  if (val_idx.empty()) throw std::invalid_argument("train: the validation split is empty");
  const auto counts = manifest.counts_in(Split::Train);
  for (auto e : kAllEmotions) {
    if (counts[index_of(e)] != 0) continue;
    if (config.weighted_sampler) {
      throw std::invalid_argument("train: class " + std::string(emotion_name(e)) +
                                  " is absent from the train split; sampler weights are undefined");
    }
    spdlog::warn("train: class {} is absent from the train split", emotion_name(e));
  }

  std::optional<WeightedSampler> sampler;
  if (config.weighted_sampler) sampler.emplace(build_sampler(manifest, class_weights(counts)));

  auto model = nn::build_model(spec);
  nn::Adam adam(model->parameters(), {.lr = config.learning_rate});

  TrainResult result;
  result.best.model = spec;
  result.best.config = config;
  result.best.manifest_fingerprint = manifest.fingerprint();
  double best_acc = -1.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = plan_epoch(manifest, config, sampler ? &*sampler : nullptr, epoch);
    BatchStats stats;
    for (auto [lo, hi] : batch_ranges(order.size(), static_cast<std::size_t>(config.batch_size))) {
      std::vector<Image> views;
      std::vector<int> labels;
      views.reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) {
        const auto& s = manifest[order[i]];
        views.push_back(training_view(s.pixels, config, epoch, i));
        labels.push_back(static_cast<int>(index_of(s.label)));
      }
      std::vector<const Image*> ptrs;
      for (const auto& v : views) ptrs.push_back(&v);

      adam.zero_grad();
      nn::Tensor logits = model->forward(to_batch(ptrs), true);
      nn::Tensor loss = nn::cross_entropy(logits, labels);
      if (!std::isfinite(loss.data()[0])) throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch));
      loss.backward();
      adam.step();
      stats.add(logits, loss.data()[0], labels);
    }

    const Evaluation val = evaluate(*model, manifest, val_idx, config.eval_batch_size);
    EpochLog log{epoch, stats.loss(), stats.accuracy(), val.loss, val.accuracy,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    result.epochs.push_back(log);
    spdlog::info("epoch {:3d}  loss {:.4f}  acc {:.4f}  val_loss {:.4f}  val_acc {:.4f}  {:.1f}s", epoch,
                 log.train_loss, log.train_accuracy, log.val_loss, log.val_accuracy, log.wall_seconds);
    if (on_epoch) on_epoch(log);

    if (val.accuracy > best_acc) {
      best_acc = val.accuracy;
      since_best = 0;
      result.best.epoch = epoch;
      result.best.val_accuracy = val.accuracy;
      result.best.state = capture_state(*model);
    } else if (++since_best >= config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  return result;
}

}  // namespace ferkit
