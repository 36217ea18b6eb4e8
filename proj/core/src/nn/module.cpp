#include "ferkit/nn/module.hpp"

#include <cmath>
#include <stdexcept>

namespace ferkit::nn {

void Module::collect(const std::string& prefix, bool params, NamedTensors& out) const {
  for (const auto& [name, t] : params ? params_ : buffers_) out.emplace_back(prefix + name, t);
  for (const auto& [name, child] : children_) child->collect(prefix + name + ".", params, out);
}

NamedTensors Module::named_parameters() const {
  NamedTensors out;
  collect("", true, out);
  return out;
}

NamedTensors Module::named_buffers() const {
  NamedTensors out;
  collect("", false, out);
  return out;
}

NamedTensors Module::state() const {
  NamedTensors out = named_parameters();
  auto b = named_buffers();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<Tensor> Module::parameters() const {
  std::vector<Tensor> out;
  for (auto& [_, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (auto& [_, t] : named_parameters()) n += t.numel();
  return n;
}

Tensor Module::register_parameter(std::string name, Tensor t) {
  t.node()->requires_grad = true;
  params_.emplace_back(std::move(name), t);
  return t;
}

Tensor Module::register_buffer(std::string name, Tensor t) {
  buffers_.emplace_back(std::move(name), t);
  return t;
}

Tensor kaiming_normal(Shape shape, FanMode mode, Rng& rng) {
  if (shape.size() < 2) throw std::invalid_argument("kaiming_normal: need at least 2 dims");
  std::size_t receptive = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) receptive *= static_cast<std::size_t>(shape[i]);
  const std::size_t fan = static_cast<std::size_t>(mode == FanMode::Out ? shape[0] : shape[1]) * receptive;
  const double std = std::sqrt(2.0 / static_cast<double>(fan));
  std::vector<float> v(numel(shape));
  for (auto& x : v) x = static_cast<float>(rng.normal() * std);
  return Tensor::from(std::move(shape), std::move(v));
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<float> v(numel(shape));
  for (auto& x : v) x = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
  return Tensor::from(std::move(shape), std::move(v));
}

Conv2d::Conv2d(const Conv2dSpec& spec, Rng& rng) : spec_(spec) {
  if (spec.in <= 0 || spec.out <= 0 || spec.groups <= 0 || spec.in % spec.groups || spec.out % spec.groups) {
    throw std::invalid_argument("Conv2d: bad channel/group configuration");
  }
  weight_ = register_parameter(
      "weight", kaiming_normal({spec.out, spec.in / spec.groups, spec.kernel, spec.kernel}, spec.fan, rng));
  if (spec.bias) bias_ = register_parameter("bias", Tensor::zeros({spec.out}));
}

Tensor Conv2d::forward(const Tensor& x) const {
  return conv2d(x, weight_, bias_, {spec_.stride, spec_.padding, spec_.groups});
}

BatchNorm2d::BatchNorm2d(int channels, float momentum, float eps) : momentum_(momentum), eps_(eps) {
  gamma_ = register_parameter("weight", Tensor::full({channels}, 1.0f));
  beta_ = register_parameter("bias", Tensor::zeros({channels}));
  running_mean_ = register_buffer("running_mean", Tensor::zeros({channels}));
  running_var_ = register_buffer("running_var", Tensor::full({channels}, 1.0f));
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  return batch_norm(x, gamma_, beta_, running_mean_, running_var_, training, momentum_, eps_);
}

Linear::Linear(int in, int out, Rng& rng, double weight_bound, double bias_bound) {
  const double b = 1.0 / std::sqrt(static_cast<double>(in));
  weight_ = register_parameter("weight", uniform_tensor({out, in}, weight_bound < 0 ? b : weight_bound, rng));
  bias_ = register_parameter("bias", uniform_tensor({out}, bias_bound < 0 ? b : bias_bound, rng));
}

Tensor Linear::forward(const Tensor& x) const { return linear(x, weight_, bias_); }

}  // namespace ferkit::nn
