// Copyright 2026-present the volsr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "volsr/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "conv_engine.hpp"
#include "volsr/error.hpp"
#include "volsr/kernels/kernels.hpp"

namespace volsr::nn {

namespace {

using detail::TensorImpl;

TensorImpl& input(TensorImpl& out, std::size_t i) { return *out.node->inputs[i]; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

std::int64_t as_i64(std::size_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) { return add_scaled(a, b, 1.0); }

Tensor sub(const Tensor& a, const Tensor& b) { return add_scaled(a, b, -1.0); }

Tensor add_scaled(const Tensor& a, const Tensor& b, double s) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.data().begin(), a.data().end());
  kernels::active().axpy(a.numel(), s, b.data().data(), out.data());
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_result(a.shape(), std::move(out), {a, b}, [ga, gb, s](TensorImpl& o) {
    const auto n = as_i64(o.grad.size());
    if (ga) {
      auto& g = input(o, 0).grad_buffer();
      kernels::active().axpy(n, 1.0, o.grad.data(), g.data());
    }
    if (gb) {
      auto& g = input(o, 1).grad_buffer();
      kernels::active().axpy(n, s, o.grad.data(), g.data());
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(static_cast<std::size_t>(a.numel()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_result(a.shape(), std::move(out), {a, b}, [ga, gb](TensorImpl& o) {
    TensorImpl& ia = input(o, 0);
    TensorImpl& ib = input(o, 1);
    if (ga) {
      auto& g = ia.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * ib.data[i];
    }
    if (gb) {
      auto& g = ib.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * ia.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= s;
  return make_result(a.shape(), std::move(out), {a}, [s](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    kernels::active().axpy(as_i64(g.size()), s, o.grad.data(), g.data());
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({}, {s}, {a}, [](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    for (double& v : g) v += o.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.numel());
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({}, {s / n}, {a}, [n](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    const double d = o.grad[0] / n;
    for (double& v : g) v += d;
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  std::vector<double> out(static_cast<std::size_t>(x.numel()));
  kernels::active().leaky_relu_forward(x.numel(), slope, x.data().data(), out.data());
  return make_result(x.shape(), std::move(out), {x}, [slope](TensorImpl& o) {
    TensorImpl& in = input(o, 0);
    auto& g = in.grad_buffer();
    kernels::active().leaky_relu_backward(as_i64(g.size()), slope, in.data.data(), o.grad.data(), g.data());
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(static_cast<std::size_t>(x.numel()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.data()[i];
    // Branches keep exp() from overflowing for large |v|.
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return make_result(x.shape(), std::move(out), {x}, [](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * o.data[i] * (1.0 - o.data[i]);
  });
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

std::int64_t conv_out_extent(std::int64_t n, std::int64_t k, std::int64_t p, std::int64_t s, const char* axis) {
  const std::int64_t span = n + 2 * p - k;
  if (span < 0 || span % s != 0) {
    throw ShapeError(std::string("conv: non-integral output size along ") + axis + " (extent " + std::to_string(n) +
                     ", kernel " + std::to_string(k) + ", padding " + std::to_string(p) + ", stride " +
                     std::to_string(s) + ")");
  }
  return span / s + 1;
}

Tensor conv_impl(const Tensor& x, const Tensor& w, const Tensor& b, const engine::ConvGeom& g, Shape out_shape) {
  std::vector<double> out(static_cast<std::size_t>(numel(out_shape)));
  engine::conv_forward(g, x.data().data(), w.data().data(), b.defined() ? b.data().data() : nullptr, out.data());
  const bool gx = x.requires_grad(), gw = w.requires_grad(), gb = b.defined() && b.requires_grad();
  return make_result(std::move(out_shape), std::move(out), {x, w, b}, [g, gx, gw, gb](TensorImpl& o) {
    // inputs are stored in order x, w, [b]
    TensorImpl& ix = input(o, 0);
    TensorImpl& iw = input(o, 1);
    if (gx) engine::conv_backward_input(g, iw.data.data(), o.grad.data(), ix.grad_buffer().data());
    if (gw || gb) {
      double* gwp = gw ? iw.grad_buffer().data() : nullptr;
      double* gbp = gb ? input(o, 2).grad_buffer().data() : nullptr;
      if (gwp) {
        engine::conv_backward_weight(g, ix.data.data(), o.grad.data(), gwp, gbp);
      } else {
        // bias only
        const std::int64_t P = g.out_spatial();
        for (std::int64_t n = 0; n < g.n; ++n)
          for (std::int64_t co = 0; co < g.cout; ++co) {
            const double* row = o.grad.data() + (n * g.cout + co) * P;
            double s = 0.0;
            for (std::int64_t p = 0; p < P; ++p) s += row[p];
            gbp[co] += s;
          }
      }
    }
  });
}

void check_conv_args(const Tensor& x, const Tensor& w, const Tensor& b, int spatial, int stride, int padding) {
  const int rank = spatial + 2;
  if (x.ndim() != rank || w.ndim() != rank) {
    throw ShapeError("conv: expected rank-" + std::to_string(rank) + " input and weight, got " + to_string(x.shape()) +
                     " and " + to_string(w.shape()));
  }
  if (x.dim(1) != w.dim(1)) {
    throw ShapeError("conv: input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
                     std::to_string(w.dim(1)));
  }
  for (int i = 2; i < rank; ++i) {
    if (w.dim(i) % 2 == 0) throw ShapeError("conv: kernel extents must be odd, got " + to_string(w.shape()));
  }
  if (b.defined() && (b.ndim() != 1 || b.dim(0) != w.dim(0))) {
    throw ShapeError("conv: bias must have shape (" + std::to_string(w.dim(0)) + ")");
  }
  if (stride < 1 || padding < 0) throw ShapeError("conv: stride must be >= 1 and padding >= 0");
}

}  // namespace

Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding) {
  check_conv_args(x, w, b, 3, stride, padding);
  engine::ConvGeom g;
  g.n = x.dim(0);
  g.cin = x.dim(1);
  g.d = x.dim(2);
  g.h = x.dim(3);
  g.w = x.dim(4);
  g.cout = w.dim(0);
  g.kd = w.dim(2);
  g.kh = w.dim(3);
  g.kw = w.dim(4);
  g.stride = stride;
  g.pd = g.ph = g.pw = padding;
  g.od = conv_out_extent(g.d, g.kd, padding, stride, "depth");
  g.oh = conv_out_extent(g.h, g.kh, padding, stride, "height");
  g.ow = conv_out_extent(g.w, g.kw, padding, stride, "width");
  return conv_impl(x, w, b, g, {g.n, g.cout, g.od, g.oh, g.ow});
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding) {
  check_conv_args(x, w, b, 2, stride, padding);
  engine::ConvGeom g;
  g.n = x.dim(0);
  g.cin = x.dim(1);
  g.d = 1;
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.cout = w.dim(0);
  g.kd = 1;
  g.kh = w.dim(2);
  g.kw = w.dim(3);
  g.stride = stride;
  g.pd = 0;
  g.ph = g.pw = padding;
  g.od = 1;
  g.oh = conv_out_extent(g.h, g.kh, padding, stride, "height");
  g.ow = conv_out_extent(g.w, g.kw, padding, stride, "width");
  return conv_impl(x, w, b, g, {g.n, g.cout, g.oh, g.ow});
}

// ---------------------------------------------------------------------------
// Resampling / pooling

Tensor upsample_nearest3d(const Tensor& x, int factor) {
  if (x.ndim() != 5) throw ShapeError("upsample_nearest3d expects (N,C,D,H,W), got " + to_string(x.shape()));
  if (factor < 1) throw ShapeError("upsample factor must be >= 1");
  const std::int64_t f = factor;
  const std::int64_t nc = x.dim(0) * x.dim(1), d = x.dim(2), h = x.dim(3), w = x.dim(4);
  const std::int64_t D = d * f, H = h * f, W = w * f;
  std::vector<double> out(static_cast<std::size_t>(nc * D * H * W));
  const double* src = x.data().data();
  for (std::int64_t c = 0; c < nc; ++c)
    for (std::int64_t z = 0; z < D; ++z)
      for (std::int64_t y = 0; y < H; ++y) {
        const double* in_row = src + ((c * d + z / f) * h + y / f) * w;
        double* out_row = out.data() + ((c * D + z) * H + y) * W;
        for (std::int64_t xx = 0; xx < W; ++xx) out_row[xx] = in_row[xx / f];
      }
  return make_result({x.dim(0), x.dim(1), D, H, W}, std::move(out), {x}, [=](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    for (std::int64_t c = 0; c < nc; ++c)
      for (std::int64_t z = 0; z < D; ++z)
        for (std::int64_t y = 0; y < H; ++y) {
          double* in_row = g.data() + ((c * d + z / f) * h + y / f) * w;
          const double* out_row = o.grad.data() + ((c * D + z) * H + y) * W;
          for (std::int64_t xx = 0; xx < W; ++xx) in_row[xx / f] += out_row[xx];
        }
  });
}

Tensor avg_pool3d(const Tensor& x, int k) {
  if (x.ndim() != 5) throw ShapeError("avg_pool3d expects (N,C,D,H,W), got " + to_string(x.shape()));
  if (k < 1 || x.dim(2) % k || x.dim(3) % k || x.dim(4) % k) {
    throw ShapeError("avg_pool3d: spatial dims " + to_string(x.shape()) + " not divisible by " + std::to_string(k));
  }
  const std::int64_t nc = x.dim(0) * x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const std::int64_t d = D / k, h = H / k, w = W / k;
  const double inv = 1.0 / static_cast<double>(k * k * k);
  std::vector<double> out(static_cast<std::size_t>(nc * d * h * w), 0.0);
  const double* src = x.data().data();
  for (std::int64_t c = 0; c < nc; ++c)
    for (std::int64_t z = 0; z < D; ++z)
      for (std::int64_t y = 0; y < H; ++y) {
        const double* in_row = src + ((c * D + z) * H + y) * W;
        double* out_row = out.data() + ((c * d + z / k) * h + y / k) * w;
        for (std::int64_t xx = 0; xx < W; ++xx) out_row[xx / k] += in_row[xx] * inv;
      }
  return make_result({x.dim(0), x.dim(1), d, h, w}, std::move(out), {x}, [=](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    for (std::int64_t c = 0; c < nc; ++c)
      for (std::int64_t z = 0; z < D; ++z)
        for (std::int64_t y = 0; y < H; ++y) {
          double* in_row = g.data() + ((c * D + z) * H + y) * W;
          const double* out_row = o.grad.data() + ((c * d + z / k) * h + y / k) * w;
          for (std::int64_t xx = 0; xx < W; ++xx) in_row[xx] += out_row[xx / k] * inv;
        }
  });
}

Tensor max_pool2d(const Tensor& x, int k) {
  if (x.ndim() != 4) throw ShapeError("max_pool2d expects (N,C,H,W), got " + to_string(x.shape()));
  if (k < 1 || x.dim(2) < k || x.dim(3) < k) throw ShapeError("max_pool2d: input smaller than the pooling window");
  const std::int64_t nc = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t h = H / k, w = W / k;
  std::vector<double> out(static_cast<std::size_t>(nc * h * w));
  std::vector<std::int64_t> arg(out.size());
  const double* src = x.data().data();
  for (std::int64_t c = 0; c < nc; ++c)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t xx = 0; xx < w; ++xx) {
        std::int64_t best = (c * H + y * k) * W + xx * k;
        for (std::int64_t a = 0; a < k; ++a)
          for (std::int64_t b = 0; b < k; ++b) {
            const std::int64_t idx = (c * H + y * k + a) * W + xx * k + b;
            if (src[idx] > src[best]) best = idx;
          }
        const std::size_t o = static_cast<std::size_t>((c * h + y) * w + xx);
        out[o] = src[best];
        arg[o] = best;
      }
  return make_result({x.dim(0), x.dim(1), h, w}, std::move(out), {x}, [arg = std::move(arg)](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    for (std::size_t i = 0; i < arg.size(); ++i) g[static_cast<std::size_t>(arg[i])] += o.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Layout

Tensor concat_channels(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels of an empty list");
  const Tensor& first = xs.front();
  if (first.ndim() < 2) throw ShapeError("concat_channels needs tensors with a channel dim");
  std::int64_t channels = 0;
  for (const auto& t : xs) {
    if (t.ndim() != first.ndim() || t.dim(0) != first.dim(0)) {
      throw ShapeError("concat_channels: batch/rank mismatch " + to_string(t.shape()) + " vs " + to_string(first.shape()));
    }
    for (int i = 2; i < first.ndim(); ++i) {
      if (t.dim(i) != first.dim(i)) {
        throw ShapeError("concat_channels: spatial mismatch " + to_string(t.shape()) + " vs " + to_string(first.shape()));
      }
    }
    channels += t.dim(1);
  }
  const std::int64_t n = first.dim(0);
  const std::int64_t spatial = first.numel() / (n * first.dim(1));
  Shape shape = first.shape();
  shape[1] = channels;
  std::vector<double> out(static_cast<std::size_t>(n * channels * spatial));
  std::vector<std::int64_t> widths;
  std::vector<bool> needs;
  for (std::int64_t s = 0; s < n; ++s) {
    double* dst = out.data() + s * channels * spatial;
    for (const auto& t : xs) {
      const std::int64_t block = t.dim(1) * spatial;
      std::copy_n(t.data().data() + s * block, block, dst);
      dst += block;
    }
  }
  for (const auto& t : xs) {
    widths.push_back(t.dim(1) * spatial);
    needs.push_back(t.requires_grad());
  }
  return make_result(std::move(shape), std::move(out), xs, [=](TensorImpl& o) {
    std::vector<double*> grads(widths.size(), nullptr);
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (needs[i]) grads[i] = input(o, i).grad_buffer().data();
    }
    const std::int64_t total = channels * spatial;
    for (std::int64_t s = 0; s < n; ++s) {
      const double* src = o.grad.data() + s * total;
      for (std::size_t i = 0; i < widths.size(); ++i) {
        if (grads[i]) {
          double* dst = grads[i] + s * widths[i];
          for (std::int64_t j = 0; j < widths[i]; ++j) dst[j] += src[j];
        }
        src += widths[i];
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape " + to_string(x.shape()) + " -> " + to_string(shape) + " changes the element count");
  }
  return make_result(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), {x}, [](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor view_slices(const Tensor& x, Axis axis, int stride) {
  if (x.ndim() != 5) throw ShapeError("view_slices expects (N,C,D,H,W), got " + to_string(x.shape()));
  if (stride < 1) throw ShapeError("slice stride must be >= 1");
  const std::int64_t n = x.dim(0), c = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const int ax = array_axis(axis);
  const std::int64_t len = ax == 0 ? D : (ax == 1 ? H : W);
  const std::int64_t count = (len + stride - 1) / stride;
  const std::int64_t p = ax == 0 ? H : D;
  const std::int64_t q = ax == 2 ? H : W;
  // index of element (s, ci, i, j) of slice l in the source volume
  auto source = [=](std::int64_t s, std::int64_t ci, std::int64_t l, std::int64_t i, std::int64_t j) {
    const std::int64_t pos = l * stride;
    std::int64_t z = 0, y = 0, xx = 0;
    if (ax == 0) {
      z = pos; y = i; xx = j;
    } else if (ax == 1) {
      z = i; y = pos; xx = j;
    } else {
      z = i; y = j; xx = pos;
    }
    return (((s * c + ci) * D + z) * H + y) * W + xx;
  };
  std::vector<std::int64_t> map(static_cast<std::size_t>(n * count * c * p * q));
  std::size_t o = 0;
  for (std::int64_t s = 0; s < n; ++s)
    for (std::int64_t l = 0; l < count; ++l)
      for (std::int64_t ci = 0; ci < c; ++ci)
        for (std::int64_t i = 0; i < p; ++i)
          for (std::int64_t j = 0; j < q; ++j) map[o++] = source(s, ci, l, i, j);
  std::vector<double> out(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = x.data()[static_cast<std::size_t>(map[i])];
  return make_result({n * count, c, p, q}, std::move(out), {x}, [map = std::move(map)](TensorImpl& o) {
    auto& g = input(o, 0).grad_buffer();
    for (std::size_t i = 0; i < map.size(); ++i) g[static_cast<std::size_t>(map[i])] += o.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Losses

Tensor mean_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_abs_diff");
  const double n = static_cast<double>(a.numel());
  const double s = kernels::active().sum_abs_diff(a.numel(), a.data().data(), b.data().data());
  const bool ga = a.requires_grad(), gb = b.requires_grad();
  return make_result({}, {s / n}, {a, b}, [ga, gb, n](TensorImpl& o) {
    TensorImpl& ia = input(o, 0);
    TensorImpl& ib = input(o, 1);
    const double d = o.grad[0] / n;
    double* g1 = ga ? ia.grad_buffer().data() : nullptr;
    double* g2 = gb ? ib.grad_buffer().data() : nullptr;
    for (std::size_t i = 0; i < ia.data.size(); ++i) {
      const double diff = ia.data[i] - ib.data[i];
      const double sg = diff > 0.0 ? d : (diff < 0.0 ? -d : 0.0);
      if (g1) g1[i] += sg;
      if (g2) g2[i] -= sg;
    }
  });
}

Tensor bce_with_logits_mean(const Tensor& logits, double label) {
  const double n = static_cast<double>(logits.numel());
  double s = 0.0;
  for (double z : logits.data()) s += std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::fabs(z)));
  return make_result({}, {s / n}, {logits}, [label, n](TensorImpl& o) {
    TensorImpl& in = input(o, 0);
    auto& g = in.grad_buffer();
    const double d = o.grad[0] / n;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double z = in.data[i];
      const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      g[i] += (p - label) * d;
    }
  });
}

}  // namespace volsr::nn
