#include "ferkit/nn/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ferkit::nn {

std::string_view architecture_name(Architecture a) noexcept {
  switch (a) {
    case Architecture::ResNet18: return "resnet18";
    case Architecture::ResNet34: return "resnet34";
    case Architecture::ResNet50: return "resnet50";
    case Architecture::DenseNet121: return "densenet121";
    case Architecture::EfficientNetB0: return "efficientnet_b0";
  }
  return "?";
}

std::optional<Architecture> parse_architecture(std::string_view name) noexcept {
  for (auto a : kAllArchitectures) {
    if (architecture_name(a) == name) return a;
  }
  return std::nullopt;
}

void ModelSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("ModelSpec: num_classes must be >= 2");
  if (!(width > 0.0) || width > 4.0) throw std::invalid_argument("ModelSpec: width must be in (0, 4]");
  if (pretrained) throw std::invalid_argument("ModelSpec: pretrained weights are not available");
}

namespace {

constexpr int kInputChannels = 3;

struct Scaler {
  double width;
  int operator()(int channels) const {
    return std::max(1, static_cast<int>(std::lround(channels * width)));
  }
};

// EfficientNet rounds channel counts to multiples of 8.
int make_divisible(double v, int divisor = 8) {
  int r = std::max(divisor, static_cast<int>(v + divisor / 2.0) / divisor * divisor);
  if (r < 0.9 * v) r += divisor;
  return r;
}

using ConvPtr = std::shared_ptr<Conv2d>;
using BnPtr = std::shared_ptr<BatchNorm2d>;


// ---------------------------------------------------------------- ResNet

class ResBlock : public Module {
 public:
  ResBlock(int in, int planes, int stride, bool bottleneck, int expansion, Rng& rng) : bottleneck_(bottleneck) {
    const int out = planes * expansion;
    if (bottleneck) {
      c1_ = register_module("conv1", std::make_shared<Conv2d>(Conv2dSpec{in, planes, 1}, rng));
      b1_ = register_module("bn1", std::make_shared<BatchNorm2d>(planes));
      c2_ = register_module("conv2", std::make_shared<Conv2d>(Conv2dSpec{planes, planes, 3, stride, 1}, rng));
      b2_ = register_module("bn2", std::make_shared<BatchNorm2d>(planes));
      c3_ = register_module("conv3", std::make_shared<Conv2d>(Conv2dSpec{planes, out, 1}, rng));
      b3_ = register_module("bn3", std::make_shared<BatchNorm2d>(out));
    } else {
      c1_ = register_module("conv1", std::make_shared<Conv2d>(Conv2dSpec{in, planes, 3, stride, 1}, rng));
      b1_ = register_module("bn1", std::make_shared<BatchNorm2d>(planes));
      c2_ = register_module("conv2", std::make_shared<Conv2d>(Conv2dSpec{planes, planes, 3, 1, 1}, rng));
      b2_ = register_module("bn2", std::make_shared<BatchNorm2d>(planes));
    }
    if (stride != 1 || in != out) {
      dc_ = register_module("downsample.0", std::make_shared<Conv2d>(Conv2dSpec{in, out, 1, stride}, rng));
      db_ = register_module("downsample.1", std::make_shared<BatchNorm2d>(out));
    }
  }

  Tensor forward(const Tensor& x, bool training) {
    Tensor y = relu(b1_->forward(c1_->forward(x), training));
    y = b2_->forward(c2_->forward(y), training);
    if (bottleneck_) y = b3_->forward(c3_->forward(relu(y)), training);
    Tensor identity = dc_ ? db_->forward(dc_->forward(x), training) : x;
    return relu(add(y, identity));
  }

 private:
  bool bottleneck_;
  ConvPtr c1_, c2_, c3_, dc_;
  BnPtr b1_, b2_, b3_, db_;
};

class ResNet final : public Classifier {
 public:
  ResNet(std::initializer_list<int> layers, bool bottleneck, const ModelSpec& spec, Rng& rng) {
    const Scaler s{spec.width};
    const int expansion = bottleneck ? 4 : 1;
    int in = s(64);
    conv1_ = register_module("conv1", std::make_shared<Conv2d>(Conv2dSpec{kInputChannels, in, 7, 2, 3}, rng));
    bn1_ = register_module("bn1", std::make_shared<BatchNorm2d>(in));
    const int planes[] = {64, 128, 256, 512};
    int stage = 0;
    for (int blocks : layers) {
      const int p = s(planes[stage]);
      for (int b = 0; b < blocks; ++b) {
        const int stride = (stage > 0 && b == 0) ? 2 : 1;
        blocks_.push_back(register_module(
            "layer" + std::to_string(stage + 1) + "." + std::to_string(b),
            std::make_shared<ResBlock>(in, p, stride, bottleneck, expansion, rng)));
        in = p * expansion;
      }
      ++stage;
    }
    fc_ = register_module("fc", std::make_shared<Linear>(in, spec.num_classes, rng));
  }

  Tensor forward(const Tensor& x, bool training) override {
    Tensor y = relu(bn1_->forward(conv1_->forward(repeat_channels(x, kInputChannels)), training));
    y = max_pool2d(y, 3, 2, 1);
    for (auto& b : blocks_) y = b->forward(y, training);
    return fc_->forward(flatten(global_avg_pool(y)));
  }

 private:
  ConvPtr conv1_;
  BnPtr bn1_;
  std::vector<std::shared_ptr<ResBlock>> blocks_;
  std::shared_ptr<Linear> fc_;
};

// -------------------------------------------------------------- DenseNet

class DenseLayer : public Module {
 public:
  DenseLayer(int in, int growth, int bn_size, Rng& rng) {
    n1_ = register_module("norm1", std::make_shared<BatchNorm2d>(in));
    c1_ = register_module("conv1",
                          std::make_shared<Conv2d>(Conv2dSpec{in, bn_size * growth, 1, 1, 0, 1, false, FanMode::In}, rng));
    n2_ = register_module("norm2", std::make_shared<BatchNorm2d>(bn_size * growth));
    c2_ = register_module(
        "conv2", std::make_shared<Conv2d>(Conv2dSpec{bn_size * growth, growth, 3, 1, 1, 1, false, FanMode::In}, rng));
  }

  Tensor forward(const Tensor& x, bool training) {
    Tensor y = c1_->forward(relu(n1_->forward(x, training)));
    return c2_->forward(relu(n2_->forward(y, training)));
  }

 private:
  BnPtr n1_, n2_;
  ConvPtr c1_, c2_;
};

class Transition : public Module {
 public:
  Transition(int in, int out, Rng& rng) {
    n_ = register_module("norm", std::make_shared<BatchNorm2d>(in));
    c_ = register_module("conv", std::make_shared<Conv2d>(Conv2dSpec{in, out, 1, 1, 0, 1, false, FanMode::In}, rng));
  }
  Tensor forward(const Tensor& x, bool training) {
    Tensor y = c_->forward(relu(n_->forward(x, training)));
    return avg_pool2d(y, 2, 2);
  }

 private:
  BnPtr n_;
  ConvPtr c_;
};

class DenseNet final : public Classifier {
 public:
  DenseNet(const ModelSpec& spec, Rng& rng) {
    const Scaler s{spec.width};
    const int growth = s(32);
    const int bn_size = 4;
    const int block_config[] = {6, 12, 24, 16};
    int c = s(64);
    conv0_ = register_module(
        "features.conv0", std::make_shared<Conv2d>(Conv2dSpec{kInputChannels, c, 7, 2, 3, 1, false, FanMode::In}, rng));
    norm0_ = register_module("features.norm0", std::make_shared<BatchNorm2d>(c));
    for (int b = 0; b < 4; ++b) {
      std::vector<std::shared_ptr<DenseLayer>> block;
      for (int l = 0; l < block_config[b]; ++l) {
        block.push_back(register_module(
            "features.denseblock" + std::to_string(b + 1) + ".denselayer" + std::to_string(l + 1),
            std::make_shared<DenseLayer>(c, growth, bn_size, rng)));
        c += growth;
      }
      blocks_.push_back(std::move(block));
      if (b != 3) {
        transitions_.push_back(register_module("features.transition" + std::to_string(b + 1),
                                               std::make_shared<Transition>(c, c / 2, rng)));
        c /= 2;
      }
    }
    norm5_ = register_module("features.norm5", std::make_shared<BatchNorm2d>(c));
    fc_ = register_module("classifier", std::make_shared<Linear>(c, spec.num_classes, rng, -1.0, 0.0));
  }

  Tensor forward(const Tensor& x, bool training) override {
    Tensor y = relu(norm0_->forward(conv0_->forward(repeat_channels(x, kInputChannels)), training));
    y = max_pool2d(y, 3, 2, 1);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      std::vector<Tensor> features{y};
      for (auto& layer : blocks_[b]) {
        Tensor joined = features.size() == 1 ? features[0] : concat_channels(features);
        features.push_back(layer->forward(joined, training));
      }
      y = concat_channels(features);
      if (b < transitions_.size()) y = transitions_[b]->forward(y, training);
    }
    y = relu(norm5_->forward(y, training));
    return fc_->forward(flatten(global_avg_pool(y)));
  }

 private:
  ConvPtr conv0_;
  BnPtr norm0_, norm5_;
  std::vector<std::vector<std::shared_ptr<DenseLayer>>> blocks_;
  std::vector<std::shared_ptr<Transition>> transitions_;
  std::shared_ptr<Linear> fc_;
};

// ---------------------------------------------------------- EfficientNet

class MBConv : public Module {
 public:
  MBConv(int in, int out, int expand, int kernel, int stride, Rng& rng)
      : residual_(stride == 1 && in == out) {
    const int hidden = make_divisible(in * expand);
    if (expand != 1) {
      ec_ = register_module("expand.conv", std::make_shared<Conv2d>(Conv2dSpec{in, hidden, 1}, rng));
      eb_ = register_module("expand.bn", std::make_shared<BatchNorm2d>(hidden));
    }
    const int mid = expand != 1 ? hidden : in;
    dc_ = register_module(
        "depthwise.conv",
        std::make_shared<Conv2d>(Conv2dSpec{mid, mid, kernel, stride, (kernel - 1) / 2, mid}, rng));
    db_ = register_module("depthwise.bn", std::make_shared<BatchNorm2d>(mid));
    const int squeeze = std::max(1, in / 4);
    s1_ = register_module("se.fc1", std::make_shared<Conv2d>(Conv2dSpec{mid, squeeze, 1, 1, 0, 1, true}, rng));
    s2_ = register_module("se.fc2", std::make_shared<Conv2d>(Conv2dSpec{squeeze, mid, 1, 1, 0, 1, true}, rng));
    pc_ = register_module("project.conv", std::make_shared<Conv2d>(Conv2dSpec{mid, out, 1}, rng));
    pb_ = register_module("project.bn", std::make_shared<BatchNorm2d>(out));
  }

  Tensor forward(const Tensor& x, bool training) {
    Tensor y = ec_ ? silu(eb_->forward(ec_->forward(x), training)) : x;
    y = silu(db_->forward(dc_->forward(y), training));
    Tensor gate = sigmoid(s2_->forward(silu(s1_->forward(global_avg_pool(y)))));
    y = pb_->forward(pc_->forward(scale_channels(y, gate)), training);
    return residual_ ? add(y, x) : y;
  }

 private:
  bool residual_;
  ConvPtr ec_, dc_, s1_, s2_, pc_;
  BnPtr eb_, db_, pb_;
};

class EfficientNet final : public Classifier {
 public:
  EfficientNet(const ModelSpec& spec, Rng& rng) {
    auto ch = [&](int c) { return make_divisible(c * spec.width); };
    struct Stage {
      int expand, kernel, stride, out, layers;
    };
    const Stage stages[] = {{1, 3, 1, 16, 1}, {6, 3, 2, 24, 2},  {6, 5, 2, 40, 2}, {6, 3, 2, 80, 3},
                            {6, 5, 1, 112, 3}, {6, 5, 2, 192, 4}, {6, 3, 1, 320, 1}};
    int in = ch(32);
    stem_ = register_module("stem.conv", std::make_shared<Conv2d>(Conv2dSpec{kInputChannels, in, 3, 2, 1}, rng));
    stem_bn_ = register_module("stem.bn", std::make_shared<BatchNorm2d>(in));
    int idx = 0;
    for (const auto& st : stages) {
      const int out = ch(st.out);
      for (int l = 0; l < st.layers; ++l) {
        blocks_.push_back(register_module("blocks." + std::to_string(idx++),
                                          std::make_shared<MBConv>(in, out, st.expand, st.kernel,
                                                                   l == 0 ? st.stride : 1, rng)));
        in = out;
      }
    }
    const int head = ch(1280);
    head_ = register_module("head.conv", std::make_shared<Conv2d>(Conv2dSpec{in, head, 1}, rng));
    head_bn_ = register_module("head.bn", std::make_shared<BatchNorm2d>(head));
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.num_classes));
    fc_ = register_module("classifier", std::make_shared<Linear>(head, spec.num_classes, rng, bound, 0.0));
  }

  Tensor forward(const Tensor& x, bool training) override {
    Tensor y = silu(stem_bn_->forward(stem_->forward(repeat_channels(x, kInputChannels)), training));
    for (auto& b : blocks_) y = b->forward(y, training);
    y = silu(head_bn_->forward(head_->forward(y), training));
    return fc_->forward(flatten(global_avg_pool(y)));
  }

 private:
  ConvPtr stem_, head_;
  BnPtr stem_bn_, head_bn_;
  std::vector<std::shared_ptr<MBConv>> blocks_;
  std::shared_ptr<Linear> fc_;
};

}  // namespace

std::unique_ptr<Classifier> build_model(const ModelSpec& spec) {
  spec.validate();
  Rng rng = Rng::derive(spec.seed, {0x6d6f64656cULL, static_cast<std::uint64_t>(spec.architecture)});
  switch (spec.architecture) {
    case Architecture::ResNet18: return std::make_unique<ResNet>(std::initializer_list<int>{2, 2, 2, 2}, false, spec, rng);
    case Architecture::ResNet34: return std::make_unique<ResNet>(std::initializer_list<int>{3, 4, 6, 3}, false, spec, rng);
    case Architecture::ResNet50: return std::make_unique<ResNet>(std::initializer_list<int>{3, 4, 6, 3}, true, spec, rng);
    case Architecture::DenseNet121: return std::make_unique<DenseNet>(spec, rng);
    case Architecture::EfficientNetB0: return std::make_unique<EfficientNet>(spec, rng);
  }
  throw std::invalid_argument("build_model: unknown architecture");
}

}  // namespace ferkit::nn
