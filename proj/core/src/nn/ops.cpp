#include "ferkit/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <cblas.h>

namespace ferkit::nn {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected a rank-" + std::to_string(rank) + " tensor, got " +
                                (t.defined() ? shape_string(t.shape()) : std::string("undefined")));
  }
}

struct ConvGeometry {
  int n, c, h, w;        // input
  int cout, kh, kw;      // weight
  int stride, pad, groups;
  int ho, wo;
  int cg() const { return c / groups; }
  int coutg() const { return cout / groups; }
  int k() const { return cg() * kh * kw; }
  std::size_t l() const { return static_cast<std::size_t>(ho) * wo; }
  std::size_t nl() const { return static_cast<std::size_t>(n) * l(); }
};

// cols[(c * kh + i) * kw + j][n * L + oh * wo + ow] = x[n][c0 + c][oh*s - p + i][ow*s - p + j]
void im2col(const ConvGeometry& g, const float* x, int c0, float* cols) {
  const std::size_t nl = g.nl(), l = g.l();
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  for (int c = 0; c < g.cg(); ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        float* row = cols + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * nl;
        for (int n = 0; n < g.n; ++n) {
          const float* xp = x + (static_cast<std::size_t>(n) * g.c + c0 + c) * plane;
          float* dst = row + n * l;
          for (int oh = 0; oh < g.ho; ++oh) {
            const int ih = oh * g.stride - g.pad + i;
            float* d = dst + static_cast<std::size_t>(oh) * g.wo;
            if (ih < 0 || ih >= g.h) {
              std::fill(d, d + g.wo, 0.0f);
              continue;
            }
            const float* xr = xp + static_cast<std::size_t>(ih) * g.w;
            if (g.stride == 1) {
              const int lo = std::max(0, g.pad - j);
              const int hi = std::min(g.wo, g.w + g.pad - j);
              std::fill(d, d + std::max(lo, 0), 0.0f);
              if (hi > lo) std::copy(xr + lo - g.pad + j, xr + hi - g.pad + j, d + lo);
              std::fill(d + std::max(hi, lo), d + g.wo, 0.0f);
            } else {
              for (int ow = 0; ow < g.wo; ++ow) {
                const int iw = ow * g.stride - g.pad + j;
                d[ow] = (iw >= 0 && iw < g.w) ? xr[iw] : 0.0f;
              }
            }
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const float* cols, int c0, float* dx) {
  const std::size_t nl = g.nl(), l = g.l();
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  for (int c = 0; c < g.cg(); ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        const float* row = cols + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * nl;
        for (int n = 0; n < g.n; ++n) {
          float* xp = dx + (static_cast<std::size_t>(n) * g.c + c0 + c) * plane;
          const float* src = row + n * l;
          for (int oh = 0; oh < g.ho; ++oh) {
            const int ih = oh * g.stride - g.pad + i;
            if (ih < 0 || ih >= g.h) continue;
            float* xr = xp + static_cast<std::size_t>(ih) * g.w;
            const float* s = src + static_cast<std::size_t>(oh) * g.wo;
            for (int ow = 0; ow < g.wo; ++ow) {
              const int iw = ow * g.stride - g.pad + j;
              if (iw >= 0 && iw < g.w) xr[iw] += s[ow];
            }
          }
        }
      }
    }
  }
}

template <class F>
Tensor unary(const Tensor& x, F&& forward_and_derivative) {
  // forward_and_derivative(v) -> {y, dy/dv}
  std::vector<float> deriv(x.numel());
  Tensor out = make_result(x.shape(), {x}, nullptr);
  auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto [y, d] = forward_and_derivative(xs[i]);
    ys[i] = y;
    deriv[i] = d;
  }
  if (out.requires_grad()) {
    out.node()->backward = [x, deriv = std::move(deriv)](TensorNode& o) mutable {
      if (!x.requires_grad()) return;
      auto dx = x.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += o.grad[i] * deriv[i];
    };
  }
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dOptions opt) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), weight.dim(3),
                 opt.stride, opt.padding, opt.groups, 0, 0};
  if (g.groups < 1 || g.c % g.groups != 0 || g.cout % g.groups != 0 || weight.dim(1) != g.cg()) {
    throw std::invalid_argument("conv2d: channel/group mismatch: input " + shape_string(x.shape()) + ", weight " +
                                shape_string(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.cout)) throw std::invalid_argument("conv2d: bad bias");
  g.ho = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.wo = (g.w + 2 * g.pad - g.kw) / g.stride + 1;
  if (g.ho <= 0 || g.wo <= 0) throw std::invalid_argument("conv2d: kernel larger than padded input");

  Tensor out = make_result({g.n, g.cout, g.ho, g.wo}, {x, weight, bias}, nullptr);
  const std::size_t k = g.k(), nl = g.nl(), l = g.l();
  const int coutg = g.coutg();
  std::vector<float> cols(k * nl), tmp(static_cast<std::size_t>(coutg) * nl);
  const float* xv = x.data().data();
  const float* wv = weight.data().data();
  float* yv = out.data().data();
  for (int grp = 0; grp < g.groups; ++grp) {
    im2col(g, xv, grp * g.cg(), cols.data());
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, coutg, static_cast<int>(nl), static_cast<int>(k), 1.0f,
                wv + static_cast<std::size_t>(grp) * coutg * k, static_cast<int>(k), cols.data(),
                static_cast<int>(nl), 0.0f, tmp.data(), static_cast<int>(nl));
    for (int co = 0; co < coutg; ++co) {
      const int oc = grp * coutg + co;
      const float b = bias.defined() ? bias.data()[oc] : 0.0f;
      for (int n = 0; n < g.n; ++n) {
        const float* src = tmp.data() + static_cast<std::size_t>(co) * nl + n * l;
        float* dst = yv + (static_cast<std::size_t>(n) * g.cout + oc) * l;
        for (std::size_t i = 0; i < l; ++i) dst[i] = src[i] + b;
      }
    }
  }

  if (out.requires_grad()) {
    out.node()->backward = [x, weight, bias, g](TensorNode& o) mutable {
      const std::size_t k = g.k(), nl = g.nl(), l = g.l();
      const int coutg = g.coutg();
      std::vector<float> cols(k * nl), dtmp(static_cast<std::size_t>(coutg) * nl);
      const float* dy = o.grad.data();
      for (int grp = 0; grp < g.groups; ++grp) {
        for (int co = 0; co < coutg; ++co) {
          const int oc = grp * coutg + co;
          for (int n = 0; n < g.n; ++n) {
            const float* src = dy + (static_cast<std::size_t>(n) * g.cout + oc) * l;
            std::copy(src, src + l, dtmp.data() + static_cast<std::size_t>(co) * nl + n * l);
          }
        }
        if (weight.requires_grad()) {
          im2col(g, x.data().data(), grp * g.cg(), cols.data());
          cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, coutg, static_cast<int>(k), static_cast<int>(nl),
                      1.0f, dtmp.data(), static_cast<int>(nl), cols.data(), static_cast<int>(nl), 1.0f,
                      weight.grad().data() + static_cast<std::size_t>(grp) * coutg * k, static_cast<int>(k));
        }
        if (x.requires_grad()) {
          cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(k), static_cast<int>(nl), coutg,
                      1.0f, weight.data().data() + static_cast<std::size_t>(grp) * coutg * k, static_cast<int>(k),
                      dtmp.data(), static_cast<int>(nl), 0.0f, cols.data(), static_cast<int>(nl));
          col2im_add(g, cols.data(), grp * g.cg(), x.grad().data());
        }
        if (bias.defined() && bias.requires_grad()) {
          auto db = bias.grad();
          for (int co = 0; co < coutg; ++co) {
            double acc = 0.0;
            const float* row = dtmp.data() + static_cast<std::size_t>(co) * nl;
            for (std::size_t i = 0; i < nl; ++i) acc += row[i];
            db[grp * coutg + co] += static_cast<float>(acc);
          }
        }
      }
    };
  }
  return out;
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, float momentum, float eps) {
  require_rank(x, 4, "batch_norm");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  const std::size_t m = static_cast<std::size_t>(n) * hw;
  if (gamma.numel() != static_cast<std::size_t>(c) || beta.numel() != static_cast<std::size_t>(c)) {
    throw std::invalid_argument("batch_norm: parameter size mismatch");
  }
  std::vector<float> mean(c), inv_std(c);
  const float* xv = x.data().data();
  if (training) {
    auto rm = running_mean.data();
    auto rv = running_var.data();
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0, s2 = 0.0;
      for (int b = 0; b < n; ++b) {
        const float* p = xv + (static_cast<std::size_t>(b) * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(m);
      for (int b = 0; b < n; ++b) {
        const float* p = xv + (static_cast<std::size_t>(b) * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = p[i] - mu;
          s2 += d * d;
        }
      }
      const double var = s2 / static_cast<double>(m);
      mean[ch] = static_cast<float>(mu);
      inv_std[ch] = static_cast<float>(1.0 / std::sqrt(var + eps));
      const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      rm[ch] = static_cast<float>((1.0 - momentum) * rm[ch] + momentum * mu);
      rv[ch] = static_cast<float>((1.0 - momentum) * rv[ch] + momentum * unbiased);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean.data()[ch];
      inv_std[ch] = static_cast<float>(1.0 / std::sqrt(static_cast<double>(running_var.data()[ch]) + eps));
    }
  }

  Tensor out = make_result(x.shape(), {x, gamma, beta}, nullptr);
  float* yv = out.data().data();
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * hw;
      const float scale = inv_std[ch] * gamma.data()[ch];
      const float shift = beta.data()[ch] - mean[ch] * scale;
      for (std::size_t i = 0; i < hw; ++i) yv[off + i] = xv[off + i] * scale + shift;
    }
  }

  if (out.requires_grad()) {
    out.node()->backward = [x, gamma, beta, mean = std::move(mean), inv_std = std::move(inv_std), training, n, c,
                            hw, m](TensorNode& o) mutable {
      const float* xv = x.data().data();
      const float* dy = o.grad.data();
      for (int ch = 0; ch < c; ++ch) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int b = 0; b < n; ++b) {
          const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            const double xhat = (xv[off + i] - mean[ch]) * inv_std[ch];
            sum_dy += dy[off + i];
            sum_dy_xhat += dy[off + i] * xhat;
          }
        }
        if (gamma.requires_grad()) gamma.grad()[ch] += static_cast<float>(sum_dy_xhat);
        if (beta.requires_grad()) beta.grad()[ch] += static_cast<float>(sum_dy);
        if (!x.requires_grad()) continue;
        float* dx = x.grad().data();
        const double g = gamma.data()[ch];
        for (int b = 0; b < n; ++b) {
          const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            if (training) {
              const double xhat = (xv[off + i] - mean[ch]) * inv_std[ch];
              dx[off + i] += static_cast<float>(g * inv_std[ch] / static_cast<double>(m) *
                                                (static_cast<double>(m) * dy[off + i] - sum_dy - xhat * sum_dy_xhat));
            } else {
              dx[off + i] += static_cast<float>(g * inv_std[ch] * dy[off + i]);
            }
          }
        }
      }
    };
  }
  return out;
}

Tensor relu(const Tensor& x) {
  return unary(x, [](float v) { return std::pair{v > 0.0f ? v : 0.0f, v > 0.0f ? 1.0f : 0.0f}; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, [](float v) {
    const float s = 1.0f / (1.0f + std::exp(-v));
    return std::pair{s, s * (1.0f - s)};
  });
}

Tensor silu(const Tensor& x) {
  return unary(x, [](float v) {
    const float s = 1.0f / (1.0f + std::exp(-v));
    return std::pair{v * s, s + v * s * (1.0f - s)};
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Tensor out = make_result(a.shape(), {a, b}, nullptr);
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] + b.data()[i];
  if (out.requires_grad()) {
    out.node()->backward = [a, b](TensorNode& o) mutable {
      for (const Tensor* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto g = t->grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
    };
  }
  return out;
}

Tensor scale_channels(const Tensor& x, const Tensor& s) {
  require_rank(x, 4, "scale_channels");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  if (s.numel() != static_cast<std::size_t>(n) * c) throw std::invalid_argument("scale_channels: scale size mismatch");
  Tensor out = make_result(x.shape(), {x, s}, nullptr);
  auto y = out.data();
  for (std::size_t nc = 0; nc < static_cast<std::size_t>(n) * c; ++nc) {
    const float f = s.data()[nc];
    for (std::size_t i = 0; i < hw; ++i) y[nc * hw + i] = x.data()[nc * hw + i] * f;
  }
  if (out.requires_grad()) {
    out.node()->backward = [x, s, n, c, hw](TensorNode& o) mutable {
      for (std::size_t nc = 0; nc < static_cast<std::size_t>(n) * c; ++nc) {
        if (x.requires_grad()) {
          auto dx = x.grad();
          const float f = s.data()[nc];
          for (std::size_t i = 0; i < hw; ++i) dx[nc * hw + i] += o.grad[nc * hw + i] * f;
        }
        if (s.requires_grad()) {
          double acc = 0.0;
          for (std::size_t i = 0; i < hw; ++i) acc += o.grad[nc * hw + i] * x.data()[nc * hw + i];
          s.grad()[nc] += static_cast<float>(acc);
        }
      }
    };
  }
  return out;
}

Tensor max_pool2d(const Tensor& x, int kernel, int stride, int padding) {
  require_rank(x, 4, "max_pool2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = (h + 2 * padding - kernel) / stride + 1;
  const int wo = (w + 2 * padding - kernel) / stride + 1;
  if (ho <= 0 || wo <= 0) throw std::invalid_argument("max_pool2d: window larger than input");
  Tensor out = make_result({n, c, ho, wo}, {x}, nullptr);
  std::vector<std::size_t> argmax(out.numel());
  auto y = out.data();
  const float* xv = x.data().data();
  std::size_t o = 0;
  for (int nc = 0; nc < n * c; ++nc) {
    const std::size_t base = static_cast<std::size_t>(nc) * h * w;
    for (int oh = 0; oh < ho; ++oh) {
      for (int ow = 0; ow < wo; ++ow, ++o) {
        float best = -std::numeric_limits<float>::infinity();
        std::size_t at = base;
        for (int i = 0; i < kernel; ++i) {
          const int ih = oh * stride - padding + i;
          if (ih < 0 || ih >= h) continue;
          for (int j = 0; j < kernel; ++j) {
            const int iw = ow * stride - padding + j;
            if (iw < 0 || iw >= w) continue;
            const std::size_t idx = base + static_cast<std::size_t>(ih) * w + iw;
            if (xv[idx] > best) {
              best = xv[idx];
              at = idx;
            }
          }
        }
        y[o] = best;
        argmax[o] = at;
      }
    }
  }
  if (out.requires_grad()) {
    out.node()->backward = [x, argmax = std::move(argmax)](TensorNode& o) mutable {
      auto dx = x.grad();
      for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += o.grad[i];
    };
  }
  return out;
}

Tensor avg_pool2d(const Tensor& x, int kernel, int stride) {
  require_rank(x, 4, "avg_pool2d");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = (h - kernel) / stride + 1;
  const int wo = (w - kernel) / stride + 1;
  if (ho <= 0 || wo <= 0) throw std::invalid_argument("avg_pool2d: window larger than input");
  Tensor out = make_result({n, c, ho, wo}, {x}, nullptr);
  const float inv = 1.0f / static_cast<float>(kernel * kernel);
  auto y = out.data();
  const float* xv = x.data().data();
  for (int nc = 0; nc < n * c; ++nc) {
    const std::size_t base = static_cast<std::size_t>(nc) * h * w;
    for (int oh = 0; oh < ho; ++oh) {
      for (int ow = 0; ow < wo; ++ow) {
        float acc = 0.0f;
        for (int i = 0; i < kernel; ++i) {
          for (int j = 0; j < kernel; ++j) acc += xv[base + static_cast<std::size_t>(oh * stride + i) * w + ow * stride + j];
        }
        y[(static_cast<std::size_t>(nc) * ho + oh) * wo + ow] = acc * inv;
      }
    }
  }
  if (out.requires_grad()) {
    out.node()->backward = [x, n, c, h, w, ho, wo, kernel, stride, inv](TensorNode& o) mutable {
      auto dx = x.grad();
      for (int nc = 0; nc < n * c; ++nc) {
        const std::size_t base = static_cast<std::size_t>(nc) * h * w;
        for (int oh = 0; oh < ho; ++oh) {
          for (int ow = 0; ow < wo; ++ow) {
            const float gv = o.grad[(static_cast<std::size_t>(nc) * ho + oh) * wo + ow] * inv;
            for (int i = 0; i < kernel; ++i) {
              for (int j = 0; j < kernel; ++j) dx[base + static_cast<std::size_t>(oh * stride + i) * w + ow * stride + j] += gv;
            }
          }
        }
      }
    };
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor out = make_result({n, c, 1, 1}, {x}, nullptr);
  auto y = out.data();
  for (std::size_t nc = 0; nc < y.size(); ++nc) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += x.data()[nc * hw + i];
    y[nc] = static_cast<float>(acc / static_cast<double>(hw));
  }
  if (out.requires_grad()) {
    out.node()->backward = [x, hw](TensorNode& o) mutable {
      auto dx = x.grad();
      const float inv = 1.0f / static_cast<float>(hw);
      for (std::size_t nc = 0; nc < o.grad.size(); ++nc) {
        for (std::size_t i = 0; i < hw; ++i) dx[nc * hw + i] += o.grad[nc] * inv;
      }
    };
  }
  return out;
}

Tensor flatten(const Tensor& x) {
  if (x.rank() < 2) throw std::invalid_argument("flatten: rank must be >= 2");
  const int n = x.dim(0);
  const int rest = static_cast<int>(x.numel() / static_cast<std::size_t>(std::max(n, 1)));
  Tensor out = make_result({n, rest}, {x}, nullptr);
  std::copy(x.data().begin(), x.data().end(), out.data().begin());
  if (out.requires_grad()) {
    out.node()->backward = [x](TensorNode& o) mutable {
      auto dx = x.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += o.grad[i];
    };
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: nothing to concatenate");
  const int n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  int c = 0;
  for (const auto& p : parts) {
    require_rank(p, 4, "concat_channels");
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w) throw std::invalid_argument("concat_channels: shape mismatch");
    c += p.dim(1);
  }
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<Tensor> saved(parts.begin(), parts.end());
  Tensor out = make_result({n, c, h, w}, saved, nullptr);
  auto y = out.data();
  for (int b = 0; b < n; ++b) {
    std::size_t off = static_cast<std::size_t>(b) * c * hw;
    for (const auto& p : parts) {
      const std::size_t len = static_cast<std::size_t>(p.dim(1)) * hw;
      const float* src = p.data().data() + static_cast<std::size_t>(b) * len;
      std::copy(src, src + len, y.data() + off);
      off += len;
    }
  }
  if (out.requires_grad()) {
    out.node()->backward = [saved = std::move(saved), n, c, hw](TensorNode& o) mutable {
      for (int b = 0; b < n; ++b) {
        std::size_t off = static_cast<std::size_t>(b) * c * hw;
        for (auto& p : saved) {
          const std::size_t len = static_cast<std::size_t>(p.dim(1)) * hw;
          if (p.requires_grad()) {
            float* dst = p.grad().data() + static_cast<std::size_t>(b) * len;
            for (std::size_t i = 0; i < len; ++i) dst[i] += o.grad[off + i];
          }
          off += len;
        }
      }
    };
  }
  return out;
}

Tensor repeat_channels(const Tensor& x, int times) {
  require_rank(x, 4, "repeat_channels");
  if (x.dim(1) != 1) throw std::invalid_argument("repeat_channels: input must have one channel");
  const int n = x.dim(0);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor out = make_result({n, times, x.dim(2), x.dim(3)}, {x}, nullptr);
  auto y = out.data();
  for (int b = 0; b < n; ++b) {
    const float* src = x.data().data() + static_cast<std::size_t>(b) * hw;
    for (int t = 0; t < times; ++t) std::copy(src, src + hw, y.data() + (static_cast<std::size_t>(b) * times + t) * hw);
  }
  if (out.requires_grad()) {
    out.node()->backward = [x, n, times, hw](TensorNode& o) mutable {
      auto dx = x.grad();
      for (int b = 0; b < n; ++b) {
        for (int t = 0; t < times; ++t) {
          const float* g = o.grad.data() + (static_cast<std::size_t>(b) * times + t) * hw;
          for (std::size_t i = 0; i < hw; ++i) dx[static_cast<std::size_t>(b) * hw + i] += g[i];
        }
      }
    };
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const int n = x.dim(0), f = x.dim(1), o = weight.dim(0);
  if (weight.dim(1) != f) throw std::invalid_argument("linear: feature mismatch");
  Tensor out = make_result({n, o}, {x, weight, bias}, nullptr);
  float* y = out.data().data();
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, n, o, f, 1.0f, x.data().data(), f, weight.data().data(), f,
              0.0f, y, o);
  if (bias.defined()) {
    for (int b = 0; b < n; ++b) {
      for (int j = 0; j < o; ++j) y[static_cast<std::size_t>(b) * o + j] += bias.data()[j];
    }
  }
  if (out.requires_grad()) {
    out.node()->backward = [x, weight, bias, n, f, o](TensorNode& node) mutable {
      const float* dy = node.grad.data();
      if (x.requires_grad()) {
        cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, n, f, o, 1.0f, dy, o, weight.data().data(), f, 1.0f,
                    x.grad().data(), f);
      }
      if (weight.requires_grad()) {
        cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, o, f, n, 1.0f, dy, o, x.data().data(), f, 1.0f,
                    weight.grad().data(), f);
      }
      if (bias.defined() && bias.requires_grad()) {
        auto db = bias.grad();
        for (int j = 0; j < o; ++j) {
          double acc = 0.0;
          for (int b = 0; b < n; ++b) acc += dy[static_cast<std::size_t>(b) * o + j];
          db[j] += static_cast<float>(acc);
        }
      }
    };
  }
  return out;
}

std::vector<float> softmax_rows(const Tensor& logits) {
  require_rank(logits, 2, "softmax_rows");
  const int n = logits.dim(0), k = logits.dim(1);
  std::vector<float> p(logits.numel());
  for (int b = 0; b < n; ++b) {
    const float* z = logits.data().data() + static_cast<std::size_t>(b) * k;
    const float mx = *std::max_element(z, z + k);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j]) - mx);
    for (int j = 0; j < k; ++j) {
      p[static_cast<std::size_t>(b) * k + j] = static_cast<float>(std::exp(static_cast<double>(z[j]) - mx) / sum);
    }
  }
  return p;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy");
  const int n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("cross_entropy: label count mismatch");
  double loss = 0.0;
  for (int b = 0; b < n; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= k) throw std::invalid_argument("cross_entropy: label out of range");
    const float* z = logits.data().data() + static_cast<std::size_t>(b) * k;
    const double mx = *std::max_element(z, z + k);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(z[j] - mx);
    loss += (std::log(sum) + mx) - z[y];
  }
  Tensor out = make_result({1}, {logits}, nullptr);
  out.data()[0] = static_cast<float>(loss / n);
  if (out.requires_grad()) {
    std::vector<int> ys(labels.begin(), labels.end());
    out.node()->backward = [logits, ys = std::move(ys), n, k](TensorNode& o) mutable {
      const auto p = softmax_rows(logits);
      auto dz = logits.grad();
      const float scale = o.grad[0] / static_cast<float>(n);
      for (int b = 0; b < n; ++b) {
        for (int j = 0; j < k; ++j) {
          const std::size_t i = static_cast<std::size_t>(b) * k + j;
          dz[i] += scale * (p[i] - (j == ys[b] ? 1.0f : 0.0f));
        }
      }
    };
  }
  return out;
}

}  // namespace ferkit::nn
