#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ferkit/nn/ops.hpp"
#include "ferkit/nn/tensor.hpp"
#include "ferkit/random.hpp"

namespace ferkit::nn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

class Module {
 public:
  virtual ~Module() = default;

  /// Dotted names in registration order, children included.
  NamedTensors named_parameters() const;
  /// Non-trainable state (batch-norm running statistics).
  NamedTensors named_buffers() const;
  /// Parameters followed by buffers; what a checkpoint stores.
  NamedTensors state() const;
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;

 protected:
  Tensor register_parameter(std::string name, Tensor t);
  Tensor register_buffer(std::string name, Tensor t);
  template <class M>
  std::shared_ptr<M> register_module(std::string name, std::shared_ptr<M> m) {
    children_.emplace_back(std::move(name), m);
    return m;
  }

 private:
  void collect(const std::string& prefix, bool params, NamedTensors& out) const;

  NamedTensors params_;
  NamedTensors buffers_;
  std::vector<std::pair<std::string, std::shared_ptr<Module>>> children_;
};

enum class FanMode { In, Out };

/// He-normal init for a conv/linear weight with the given fan.
Tensor kaiming_normal(Shape shape, FanMode mode, Rng& rng);
/// U(-bound, bound).
Tensor uniform_tensor(Shape shape, double bound, Rng& rng);

struct Conv2dSpec {
  int in = 0, out = 0, kernel = 1;
  int stride = 1, padding = 0, groups = 1;
  bool bias = false;
  FanMode fan = FanMode::Out;
};

class Conv2d : public Module {
 public:
  Conv2d(const Conv2dSpec& spec, Rng& rng);
  Tensor forward(const Tensor& x) const;
  const Conv2dSpec& spec() const noexcept { return spec_; }

 private:
  Conv2dSpec spec_;
  Tensor weight_, bias_;
};

class BatchNorm2d : public Module {
 public:
  explicit BatchNorm2d(int channels, float momentum = 0.1f, float eps = 1e-5f);
  Tensor forward(const Tensor& x, bool training);

 private:
  float momentum_, eps_;
  Tensor gamma_, beta_, running_mean_, running_var_;
};

class Linear : public Module {
 public:
  /// Weight and bias drawn from U(-b, b); b defaults to 1/sqrt(in).
  Linear(int in, int out, Rng& rng, double weight_bound = -1.0, double bias_bound = -1.0);
  Tensor forward(const Tensor& x) const;
  Tensor& weight() noexcept { return weight_; }
  Tensor& bias() noexcept { return bias_; }

 private:
  Tensor weight_, bias_;
};

}  // namespace ferkit::nn
