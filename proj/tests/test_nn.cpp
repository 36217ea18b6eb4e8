#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "ferkit/nn/adam.hpp"
#include "ferkit/nn/models.hpp"
#include "ferkit/nn/module.hpp"
#include "ferkit/nn/ops.hpp"
#include "ferkit/random.hpp"

namespace ferkit::nn {
namespace {

Tensor randn(Shape shape, std::uint64_t seed, bool grad = true, float scale = 1.0f) {
  Rng rng(seed);
  std::vector<float> v(numel(shape));
  for (auto& x : v) x = scale * static_cast<float>(rng.normal());
  return Tensor::from(std::move(shape), std::move(v), grad);
}

// Smooth scalar head so every op can be checked through the same loss.
Tensor head_loss(const Tensor& y) {
  const auto f = flatten(y);
  const Tensor w = randn({3, f.dim(1)}, 1234, false, 0.5f);
  std::vector<int> labels(static_cast<std::size_t>(f.dim(0)));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  return cross_entropy(linear(f, w, Tensor()), labels);
}

void check_gradients(const std::function<Tensor()>& loss_fn, std::vector<Tensor> leaves, double eps = 3e-3) {
  for (auto& t : leaves) t.zero_grad();
  loss_fn().backward();
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& t = leaves[li];
    const std::vector<float> analytic(t.grad().begin(), t.grad().end());
    const std::size_t n = t.numel();
    const std::size_t stride = std::max<std::size_t>(1, n / 24);
    for (std::size_t i = 0; i < n; i += stride) {
      const float saved = t.data()[i];
      t.data()[i] = saved + static_cast<float>(eps);
      const double up = loss_fn().data()[0];
      t.data()[i] = saved - static_cast<float>(eps);
      const double down = loss_fn().data()[0];
      t.data()[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double tol = 2e-3 + 3e-2 * std::max(std::abs(numeric), std::abs(double(analytic[i])));
      EXPECT_NEAR(analytic[i], numeric, tol) << "leaf " << li << " index " << i;
    }
  }
}

TEST(Grad, Linear) {
  auto x = randn({4, 5}, 1), w = randn({6, 5}, 2), b = randn({6}, 3);
  check_gradients([&] { return head_loss(linear(x, w, b)); }, {x, w, b});
}

TEST(Grad, CrossEntropyMatchesClosedForm) {
  auto z = randn({3, 7}, 4);
  const std::vector<int> y = {0, 6, 3};
  auto loss = cross_entropy(z, y);
  const auto p = softmax_rows(z);
  double expect = 0.0;
  for (int n = 0; n < 3; ++n) expect -= std::log(p[n * 7 + y[n]]);
  EXPECT_NEAR(loss.data()[0], expect / 3, 1e-5);
  loss.backward();
  for (int n = 0; n < 3; ++n) {
    for (int k = 0; k < 7; ++k) {
      EXPECT_NEAR(z.grad()[n * 7 + k], (p[n * 7 + k] - (k == y[n])) / 3.0, 1e-6);
    }
  }
}

TEST(Grad, Conv2dPlainStridedGrouped) {
  auto x = randn({2, 4, 7, 6}, 5);
  auto w = randn({6, 4, 3, 3}, 6, true, 0.3f), b = randn({6}, 7);
  check_gradients([&] { return head_loss(conv2d(x, w, b, {.stride = 1, .padding = 1})); }, {x, w, b});
  check_gradients([&] { return head_loss(conv2d(x, w, b, {.stride = 2, .padding = 0})); }, {x, w, b});
  auto wg = randn({4, 2, 3, 3}, 8, true, 0.3f);
  check_gradients([&] { return head_loss(conv2d(x, wg, Tensor(), {.stride = 1, .padding = 1, .groups = 2})); },
                  {x, wg});
  auto wd = randn({4, 1, 3, 3}, 9, true, 0.3f);
  check_gradients([&] { return head_loss(conv2d(x, wd, Tensor(), {.stride = 2, .padding = 1, .groups = 4})); },
                  {x, wd});
}

TEST(Grad, BatchNormTraining) {
  auto x = randn({3, 2, 4, 4}, 10), g = randn({2}, 11), b = randn({2}, 12);
  Tensor rm = Tensor::zeros({2}), rv = Tensor::full({2}, 1.0f);
  check_gradients([&] { return head_loss(batch_norm(x, g, b, rm, rv, true, 0.1f, 1e-5f)); }, {x, g, b});
}

TEST(Grad, ActivationsAndElementwise) {
  auto x = randn({2, 3, 4, 4}, 13), y = randn({2, 3, 4, 4}, 14), s = randn({2, 3, 1, 1}, 15);
  check_gradients([&] { return head_loss(relu(x)); }, {x});
  check_gradients([&] { return head_loss(sigmoid(x)); }, {x});
  check_gradients([&] { return head_loss(silu(x)); }, {x});
  check_gradients([&] { return head_loss(add(x, y)); }, {x, y});
  check_gradients([&] { return head_loss(scale_channels(x, s)); }, {x, s});
  check_gradients([&] { return head_loss(add(x, x)); }, {x});
}

TEST(Grad, PoolingAndReshaping) {
  auto x = randn({2, 3, 7, 7}, 16), y = randn({2, 2, 7, 7}, 17), one = randn({2, 1, 5, 5}, 18);
  check_gradients([&] { return head_loss(max_pool2d(x, 3, 2, 1)); }, {x});
  check_gradients([&] { return head_loss(avg_pool2d(x, 2, 2)); }, {x});
  check_gradients([&] { return head_loss(global_avg_pool(x)); }, {x});
  check_gradients(
      [&] {
        const Tensor parts[] = {x, y};
        return head_loss(concat_channels(parts));
      },
      {x, y});
  check_gradients([&] { return head_loss(repeat_channels(one, 3)); }, {one});
}

TEST(Conv, MatchesDirectOracle) {
  for (int groups : {1, 2}) {
    const int n = 2, c = 4, h = 9, wdt = 8, co = 6, k = 3, stride = 2, pad = 1;
    const auto x = randn({n, c, h, wdt}, 20, false);
    const auto w = randn({co, c / groups, k, k}, 21, false);
    const auto b = randn({co}, 22, false);
    const auto y = conv2d(x, w, b, {stride, pad, groups});
    const int oh = (h + 2 * pad - k) / stride + 1, ow = (wdt + 2 * pad - k) / stride + 1;
    ASSERT_EQ(y.shape(), (Shape{n, co, oh, ow}));
    const int cg = c / groups, og = co / groups;
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < co; ++o) {
        for (int r = 0; r < oh; ++r) {
          for (int q = 0; q < ow; ++q) {
            double acc = b.data()[o];
            const int g = o / og;
            for (int ci = 0; ci < cg; ++ci) {
              for (int u = 0; u < k; ++u) {
                for (int v = 0; v < k; ++v) {
                  const int yy = r * stride - pad + u, xx = q * stride - pad + v;
                  if (yy < 0 || yy >= h || xx < 0 || xx >= wdt) continue;
                  acc += double(x.data()[((i * c + g * cg + ci) * h + yy) * wdt + xx]) *
                         w.data()[((o * cg + ci) * k + u) * k + v];
                }
              }
            }
            EXPECT_NEAR(y.data()[((i * co + o) * oh + r) * ow + q], acc, 1e-4);
          }
        }
      }
    }
  }
}

TEST(BatchNorm, RunningStatsUpdate) {
  auto x = Tensor::from({4, 1, 1, 1}, {1, 2, 3, 6});
  auto g = Tensor::full({1}, 1.0f), b = Tensor::zeros({1});
  Tensor rm = Tensor::zeros({1}), rv = Tensor::full({1}, 1.0f);
  const auto y = batch_norm(x, g, b, rm, rv, true, 0.1f, 0.0f);
  // mean 3, biased var 3.5, unbiased 14/3
  EXPECT_NEAR(rm.data()[0], 0.3, 1e-6);
  EXPECT_NEAR(rv.data()[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-6);
  EXPECT_NEAR(y.data()[3], 3.0 / std::sqrt(3.5), 1e-5);
  const auto e = batch_norm(x, g, b, rm, rv, false, 0.1f, 0.0f);
  EXPECT_NEAR(e.data()[0], (1.0 - 0.3) / std::sqrt(rv.data()[0]), 1e-5);
}

TEST(Pool, MaxAndAverageValues) {
  auto x = Tensor::from({1, 1, 2, 4}, {1, 5, 2, 0, -1, 3, 8, 7});
  const auto m = max_pool2d(x, 2, 2, 0);
  EXPECT_EQ(std::vector<float>(m.data().begin(), m.data().end()), (std::vector<float>{5, 8}));
  const auto a = avg_pool2d(x, 2, 2);
  EXPECT_FLOAT_EQ(a.data()[0], 2.0f);
  EXPECT_FLOAT_EQ(a.data()[1], 4.25f);
  EXPECT_FLOAT_EQ(global_avg_pool(x).data()[0], 3.125f);
}

TEST(NoGrad, RecordsNothing) {
  auto x = randn({2, 3}, 30), w = randn({2, 3}, 31);
  NoGradGuard guard;
  EXPECT_FALSE(grad_enabled());
  const auto y = linear(x, w, Tensor());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Adam, MatchesHandComputation) {
  auto p = Tensor::from({2}, {1.0f, -2.0f}, true);
  Adam opt({p}, {.lr = 0.1});
  const float grads[3][2] = {{0.5f, -1.0f}, {0.25f, 2.0f}, {-1.0f, 0.0f}};
  double m[2] = {}, v[2] = {}, ref[2] = {1.0, -2.0};
  for (int t = 1; t <= 3; ++t) {
    opt.zero_grad();
    for (int i = 0; i < 2; ++i) p.grad()[i] = grads[t - 1][i];
    opt.step();
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * grads[t - 1][i];
      v[i] = 0.999 * v[i] + 0.001 * grads[t - 1][i] * grads[t - 1][i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(p.data()[i], ref[i], 1e-5) << "step " << t;
    }
  }
  EXPECT_EQ(opt.steps(), 3);
}

TEST(Adam, FitsLeastSquares) {
  auto w = Tensor::zeros({1, 2}, true);
  const auto x = Tensor::from({4, 2}, {1, 0, 0, 1, 1, 1, 2, -1});
  Adam opt({w}, {.lr = 0.05});
  for (int it = 0; it < 400; ++it) {
    opt.zero_grad();
    const auto y = linear(x, w, Tensor());
    // d/dw of mean squared error, filled by hand.
    const float t[4] = {2, -1, 1, 5};
    for (int i = 0; i < 4; ++i) {
      const float e = y.data()[i] - t[i];
      w.grad()[0] += 2 * e * x.data()[i * 2] / 4;
      w.grad()[1] += 2 * e * x.data()[i * 2 + 1] / 4;
    }
    opt.step();
  }
  EXPECT_NEAR(w.data()[0], 2.0, 1e-2);
  EXPECT_NEAR(w.data()[1], -1.0, 1e-2);
}

class Models : public ::testing::TestWithParam<Architecture> {};

TEST_P(Models, ShapeFinitenessAndDeterminism) {
  const ModelSpec spec{GetParam(), 7, false, 0.25, 3};
  auto a = build_model(spec), b = build_model(spec);
  auto c = build_model({GetParam(), 7, false, 0.25, 4});
  const auto x = randn({2, 1, 48, 48}, 40, false);
  const auto ya = a->forward(x, true);
  ASSERT_EQ(ya.shape(), (Shape{2, 7}));
  for (float v : ya.data()) EXPECT_TRUE(std::isfinite(v));
  const auto yb = b->forward(x, true);
  EXPECT_TRUE(std::equal(ya.data().begin(), ya.data().end(), yb.data().begin()));
  const auto sa = a->named_parameters(), sc = c->named_parameters();
  ASSERT_EQ(sa.size(), sc.size());
  EXPECT_FALSE(std::equal(sa[0].second.data().begin(), sa[0].second.data().end(), sc[0].second.data().begin()));

  NoGradGuard guard;
  const auto p = softmax_rows(a->forward(x, false));
  for (int n = 0; n < 2; ++n) {
    double s = 0.0;
    for (int k = 0; k < 7; ++k) s += p[n * 7 + k];
    EXPECT_NEAR(s, 1.0, 1e-5);
  }
}

TEST_P(Models, BackwardReachesEveryParameter) {
  auto m = build_model({GetParam(), 7, false, 0.25, 1});
  const auto x = randn({2, 1, 48, 48}, 41, false);
  const std::vector<int> y = {1, 4};
  cross_entropy(m->forward(x, true), y).backward();
  for (const auto& [name, t] : m->named_parameters()) EXPECT_TRUE(t.has_grad()) << name;
}

INSTANTIATE_TEST_SUITE_P(All, Models, ::testing::ValuesIn(kAllArchitectures),
                         [](const auto& info) { return std::string(architecture_name(info.param)); });

TEST(Models, FullWidthParameterCounts) {
  // Reference backbones with a 7-way head.
  const std::pair<Architecture, std::size_t> expected[] = {{Architecture::ResNet18, 11180103},
                                                           {Architecture::ResNet34, 21288263},
                                                           {Architecture::ResNet50, 23522375},
                                                           {Architecture::DenseNet121, 6961031},
                                                           {Architecture::EfficientNetB0, 4016515}};
  for (const auto& [arch, count] : expected) {
    EXPECT_EQ(build_model({arch})->parameter_count(), count) << architecture_name(arch);
  }
}

TEST(Models, SpecValidation) {
  EXPECT_THROW(build_model({Architecture::ResNet18, 7, true}), std::invalid_argument);
  EXPECT_THROW(build_model({Architecture::ResNet18, 7, false, 0.0}), std::invalid_argument);
  EXPECT_THROW(build_model({Architecture::ResNet18, 0}), std::invalid_argument);
  for (auto a : kAllArchitectures) EXPECT_EQ(parse_architecture(architecture_name(a)), a);
  EXPECT_FALSE(parse_architecture("vgg16").has_value());
}

}  // namespace
}  // namespace ferkit::nn
