#include <cstdlib>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ferkit/experiments.hpp"

namespace ferkit {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

template <class T>
T get(const YAML::Node& node, const char* key, T fallback) {
  const auto v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

Flags parse_flags(const YAML::Node& n) {
  if (!n.IsMap()) throw ConfigError("config: flags entries must be maps with augment/sampler keys");
  return {get(n, "augment", false), get(n, "sampler", false)};
}

Architecture parse_arch(const std::string& name) {
  auto a = nn::parse_architecture(name);
  if (!a) throw ConfigError("config: unknown architecture '" + name + "'");
  return *a;
}

}  // namespace

std::string flags_label(const Flags& f) {
  if (f.augment && f.sampler) return "aug+smp";
  if (f.augment) return "aug";
  if (f.sampler) return "smp";
  return "base";
}

ExperimentConfig parse_experiment_config(const std::string& yaml_text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML parse error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config: top level must be a map");

  ExperimentConfig c;
  const auto data_root = get<std::string>(root, "data_root", ".");
  if (const char* env = std::getenv("FERKIT_DATA_ROOT"); env && *env) {
    c.data_root = fs::path(env);
  } else {
    c.data_root = resolve(base_dir, data_root);
  }
  c.runs_dir = resolve(base_dir, get<std::string>(root, "runs_dir", "runs"));
  c.seed = get<std::uint64_t>(root, "seed", 0);
  if (auto m = root["model"]) c.width = get(m, "width", 1.0);

  c.train.seed = c.seed;
  if (auto t = root["train"]) {
    c.train.epochs = get(t, "epochs", c.train.epochs);
    c.train.learning_rate = get(t, "learning_rate", c.train.learning_rate);
    c.train.batch_size = get(t, "batch_size", c.train.batch_size);
    c.train.patience = get(t, "patience", c.train.patience);
    c.train.eval_batch_size = get(t, "eval_batch_size", c.train.eval_batch_size);
  }
  if (auto a = root["augment"]) {
    c.train.policy.n_ops = get(a, "n_ops", c.train.policy.n_ops);
    c.train.policy.magnitude = get(a, "magnitude", c.train.policy.magnitude);
    if (auto ops = a["ops"]) {
      c.train.policy.op_pool.clear();
      for (const auto& o : ops) {
        auto op = parse_aug_op(o.as<std::string>());
        if (!op) throw ConfigError("config: unknown augmentation op '" + o.as<std::string>() + "'");
        c.train.policy.op_pool.push_back(*op);
      }
    }
  }
  try {
    TrainConfig probe = c.train;
    probe.augment = true;
    probe.validate();
    ModelSpec{Architecture::ResNet18, 7, false, c.width, c.seed}.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (auto m = root["manifests"]) {
    if (!m.IsMap()) throw ConfigError("config: 'manifests' must map stage names to paths");
    for (const auto& kv : m) c.manifests[kv.first.as<std::string>()] = resolve(c.data_root, kv.second.as<std::string>());
  }
  auto require_stage = [&](const std::string& stage) {
    if (!c.manifests.contains(stage)) throw ConfigError("config: stage '" + stage + "' has no manifest entry");
  };

  if (auto a = root["ablation"]) {
    AblationSpec s;
    for (const auto& n : a["architectures"]) s.architectures.push_back(parse_arch(n.as<std::string>()));
    for (const auto& n : a["stages"]) {
      s.stages.push_back(n.as<std::string>());
      require_stage(s.stages.back());
    }
    s.test_stage = get<std::string>(a, "test_stage", "");
    if (!s.test_stage.empty()) require_stage(s.test_stage);
    if (auto f = a["flags"]) {
      s.flags.clear();
      for (const auto& n : f) s.flags.push_back(parse_flags(n));
    }
    if (s.architectures.empty() || s.stages.empty() || s.flags.empty()) {
      throw ConfigError("config: ablation needs at least one architecture, stage and flag set");
    }
    c.ablation = std::move(s);
  }

  if (auto x = root["cross"]) {
    CrossSpec s;
    s.architecture = parse_arch(get<std::string>(x, "architecture", "resnet18"));
    s.stage = get<std::string>(x, "stage", "");
    require_stage(s.stage);
    for (const auto& n : x["train"]) s.train.push_back(n.as<std::string>());
    for (const auto& n : x["test"]) s.test.push_back(n.as<std::string>());
    if (auto f = x["flags"]) s.flags = parse_flags(f);
    for (const auto* list : {&s.train, &s.test}) {
      for (const auto& name : *list) {
        if (name != "MERGED" && !parse_dataset(name)) throw ConfigError("config: unknown dataset '" + name + "'");
      }
    }
    if (s.train.empty() || s.test.empty()) throw ConfigError("config: cross needs train and test lists");
    c.cross = std::move(s);
  }
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

}  // namespace ferkit
