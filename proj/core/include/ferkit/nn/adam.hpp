#pragma once

#include <vector>

#include "ferkit/nn/tensor.hpp"

namespace ferkit::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam, no weight decay.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});

  void zero_grad();
  /// Parameters that never received a gradient are left untouched.
  void step();
  long steps() const noexcept { return t_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<float>> m_, v_;
  AdamOptions opt_;
  long t_ = 0;
};

}  // namespace ferkit::nn
