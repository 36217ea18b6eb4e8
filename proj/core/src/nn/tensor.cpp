#include "ferkit/nn/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace ferkit::nn {

namespace {
thread_local bool t_grad_enabled = true;
}

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<float>& TensorNode::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0f);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->value.assign(nn::numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<float> values, bool requires_grad) {
  if (values.size() != nn::numel(shape)) {
    throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) + " values for shape " +
                                shape_string(shape));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

void Tensor::backward() {
  if (numel() != 1) throw std::logic_error("backward() needs a scalar tensor");
  // Iterative post-order DFS gives a topological order of the tape.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      TensorNode* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->grad_buffer()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

Tensor Tensor::clone() const { return Tensor::from(shape(), node_->value, node_->requires_grad); }

Tensor Tensor::detach() const { return Tensor::from(shape(), node_->value, false); }

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<Tensor> parents, BackwardFn backward) {
  auto node = std::make_shared<TensorNode>();
  node->value.assign(numel(shape), 0.0f);
  node->shape = std::move(shape);
  if (t_grad_enabled) {
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const Tensor& p) { return p.defined() && p.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (auto& p : parents) {
        if (p.defined()) node->parents.push_back(p.shared());
      }
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

}  // namespace ferkit::nn
