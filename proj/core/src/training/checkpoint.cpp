#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ferkit/training.hpp"

namespace ferkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'F', 'E', 'R', 'K', 'C', 'K', 'P', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint payload is written little-endian");

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (batch_size < 1 || eval_batch_size < 1) throw std::invalid_argument("TrainConfig: batch sizes must be >= 1");
  if (augment) policy.validate();
}

json to_json(const TrainConfig& c) {
  json ops = json::array();
  for (auto op : c.policy.op_pool) ops.push_back(std::string(aug_op_name(op)));
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"patience", c.patience},
          {"eval_batch_size", c.eval_batch_size},
          {"seed", c.seed},
          {"augment", c.augment},
          {"weighted_sampler", c.weighted_sampler},
          {"policy", {{"n_ops", c.policy.n_ops}, {"magnitude", c.policy.magnitude}, {"ops", ops}}}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.patience = j.value("patience", c.patience);
  c.eval_batch_size = j.value("eval_batch_size", c.eval_batch_size);
  c.seed = j.value("seed", c.seed);
  c.augment = j.value("augment", c.augment);
  c.weighted_sampler = j.value("weighted_sampler", c.weighted_sampler);
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    c.policy.n_ops = p.value("n_ops", c.policy.n_ops);
    c.policy.magnitude = p.value("magnitude", c.policy.magnitude);
    if (p.contains("ops")) {
      c.policy.op_pool.clear();
      for (const auto& name : p.at("ops")) {
        auto op = parse_aug_op(name.get<std::string>());
        if (!op) throw std::invalid_argument("unknown augmentation op '" + name.get<std::string>() + "'");
        c.policy.op_pool.push_back(*op);
      }
    }
  }
  return c;
}

json to_json(const ModelSpec& s) {
  return {{"architecture", std::string(nn::architecture_name(s.architecture))},
          {"num_classes", s.num_classes},
          {"pretrained", s.pretrained},
          {"width", s.width},
          {"seed", s.seed}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec s;
  const auto name = j.at("architecture").get<std::string>();
  auto arch = nn::parse_architecture(name);
  if (!arch) throw std::invalid_argument("unknown architecture '" + name + "'");
  s.architecture = *arch;
  s.num_classes = j.value("num_classes", s.num_classes);
  s.pretrained = j.value("pretrained", s.pretrained);
  s.width = j.value("width", s.width);
  s.seed = j.value("seed", s.seed);
  return s;
}

json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"train_accuracy", e.train_accuracy},
          {"val_loss", e.val_loss},
          {"val_accuracy", e.val_accuracy},
          {"wall_seconds", e.wall_seconds}};
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  json tensors = json::array();
  for (const auto& t : ckpt.state) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  const json header = {{"format", "ferkit-checkpoint"},
                       {"toolkit_version", std::string(kToolkitVersion)},
                       {"model", to_json(ckpt.model)},
                       {"config", to_json(ckpt.config)},
                       {"manifest_fingerprint", ckpt.manifest_fingerprint},
                       {"epoch", ckpt.epoch},
                       {"val_accuracy", ckpt.val_accuracy},
                       {"tensors", tensors}};
  const std::string text = header.dump();
  const std::uint64_t len = text.size();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : ckpt.state) {
      out.write(reinterpret_cast<const char*>(t.values.data()),
                static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error(path.string() + ": not a ferkit checkpoint");
  }
  if (len > (1u << 28)) throw std::runtime_error(path.string() + ": implausible header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error(path.string() + ": truncated header");
  const json header = json::parse(text);

  Checkpoint ckpt;
  ckpt.model = model_spec_from_json(header.at("model"));
  ckpt.config = train_config_from_json(header.at("config"));
  ckpt.manifest_fingerprint = header.at("manifest_fingerprint").get<std::string>();
  ckpt.epoch = header.at("epoch").get<int>();
  ckpt.val_accuracy = header.at("val_accuracy").get<double>();
  for (const auto& t : header.at("tensors")) {
    StateTensor st;
    st.name = t.at("name").get<std::string>();
    st.shape = t.at("shape").get<nn::Shape>();
    st.values.resize(nn::numel(st.shape));
    in.read(reinterpret_cast<char*>(st.values.data()), static_cast<std::streamsize>(st.values.size() * sizeof(float)));
    if (!in) throw std::runtime_error(path.string() + ": truncated payload at " + st.name);
    ckpt.state.push_back(std::move(st));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error(path.string() + ": trailing bytes");
  return ckpt;
}

std::vector<StateTensor> capture_state(const nn::Module& model) {
  std::vector<StateTensor> out;
  for (const auto& [name, t] : model.state()) out.push_back({name, t.shape(), {t.data().begin(), t.data().end()}});
  return out;
}

void load_state(nn::Module& model, std::span<const StateTensor> state) {
  auto target = model.state();
  if (target.size() != state.size()) {
    throw std::invalid_argument("load_state: expected " + std::to_string(target.size()) + " tensors, got " +
                                std::to_string(state.size()));
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    auto& [name, t] = target[i];
    if (name != state[i].name || t.shape() != state[i].shape) {
      throw std::invalid_argument("load_state: mismatch at " + name + " " + nn::shape_string(t.shape()) + " vs " +
                                  state[i].name + " " + nn::shape_string(state[i].shape));
    }
    std::copy(state[i].values.begin(), state[i].values.end(), t.data().begin());
  }
}

std::unique_ptr<nn::Classifier> restore_model(const Checkpoint& ckpt) {
  auto model = nn::build_model(ckpt.model);
  load_state(*model, ckpt.state);
  return model;
}

}  // namespace ferkit
