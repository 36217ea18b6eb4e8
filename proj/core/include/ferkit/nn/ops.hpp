#pragma once

#include <span>
#include <vector>

#include "ferkit/nn/tensor.hpp"

namespace ferkit::nn {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int groups = 1;
};

/// x [N, C, H, W], weight [Cout, C / groups, kh, kw], bias [Cout] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions options = {});

/// Normalises over (N, H, W) per channel. In training mode batch statistics
/// are used and the running estimates are updated in place (unbiased variance,
/// PyTorch momentum convention); otherwise the running estimates are used.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, float momentum, float eps);

Tensor relu(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
/// x [N, C, H, W] * s [N, C, 1, 1], broadcast over H and W.
Tensor scale_channels(const Tensor& x, const Tensor& s);

Tensor max_pool2d(const Tensor& x, int kernel, int stride, int padding);
/// No padding; partial windows at the border are dropped.
Tensor avg_pool2d(const Tensor& x, int kernel, int stride);
/// [N, C, H, W] -> [N, C, 1, 1]
Tensor global_avg_pool(const Tensor& x);
/// [N, ...] -> [N, prod(...)]
Tensor flatten(const Tensor& x);
Tensor concat_channels(std::span<const Tensor> parts);
/// [N, 1, H, W] -> [N, times, H, W]
Tensor repeat_channels(const Tensor& x, int times);

/// x [N, F], weight [O, F], bias [O] -> [N, O]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Mean softmax cross-entropy of logits [N, K] against integer labels.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Row-wise softmax of [N, K] logits (no autograd).
std::vector<float> softmax_rows(const Tensor& logits);

}  // namespace ferkit::nn
