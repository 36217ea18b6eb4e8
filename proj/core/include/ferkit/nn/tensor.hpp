#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ferkit::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

struct TensorNode;

/// Reverse-mode rule for one recorded op: reads `out.grad` and accumulates
/// into the parents' grads.
using BackwardFn = std::function<void(TensorNode& out)>;

struct TensorNode {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  BackwardFn backward;

  /// Grad buffer, zero-filled on first access.
  std::vector<float>& grad_buffer();
};

/// Float32 dense tensor (row-major, NCHW for images) with tape-based autograd.
/// Copies share storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<float> data() { return node_->value; }
  std::span<const float> data() const { return node_->value; }
  /// Grad buffer (shared, zero-filled on first access).
  std::span<float> grad() const { return node_->grad_buffer(); }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }

  /// Accumulates d(this)/d(leaf) into every leaf that requires grad. `this`
  /// must hold a single element.
  void backward();
  void zero_grad();

  Tensor clone() const;
  Tensor detach() const;

  TensorNode* node() const noexcept { return node_.get(); }
  const std::shared_ptr<TensorNode>& shared() const noexcept { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Creates the result node of an op. The backward rule is recorded only when
/// grad mode is on and some parent requires grad.
Tensor make_result(Shape shape, std::vector<Tensor> parents, BackwardFn backward);

}  // namespace ferkit::nn
