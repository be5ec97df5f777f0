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

#include "volsr/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

#include "volsr/error.hpp"
#include "volsr/losses.hpp"
#include "volsr/nn/volume_bridge.hpp"

namespace volsr::metrics {

namespace {

void check_pair(const Volume& a, const Volume& b, double data_range, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  if (!(data_range > 0.0) || !std::isfinite(data_range)) {
    throw ValidationError(std::string(what) + ": data range must be positive and finite");
  }
}

std::vector<double> gaussian_taps(int n, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(n));
  const double c = 0.5 * (n - 1);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    s += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= s;
  return g;
}

// Valid-mode separable filtering along one axis of a (d,h,w) block.
std::vector<double> filter_axis(const std::vector<double>& in, Shape3 s, int axis, const std::vector<double>& g,
                                 Shape3& out_shape) {
  const auto n = static_cast<std::int64_t>(g.size());
  out_shape = s;
  if (axis == 0) out_shape.d -= n - 1;
  if (axis == 1) out_shape.h -= n - 1;
  if (axis == 2) out_shape.w -= n - 1;
  const std::int64_t step = axis == 0 ? s.h * s.w : axis == 1 ? s.w : 1;
  std::vector<double> out(static_cast<std::size_t>(out_shape.voxels()));
  std::size_t o = 0;
  for (std::int64_t z = 0; z < out_shape.d; ++z)
    for (std::int64_t y = 0; y < out_shape.h; ++y)
      for (std::int64_t x = 0; x < out_shape.w; ++x) {
        const std::int64_t base = (z * s.h + y) * s.w + x;
        double acc = 0.0;
        for (std::int64_t k = 0; k < n; ++k) acc += g[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(base + k * step)];
        out[o++] = acc;
      }
  return out;
}

std::vector<double> filter3(std::vector<double> v, Shape3 s, const std::vector<double>& g) {
  Shape3 t;
  for (int axis = 0; axis < 3; ++axis) {
    v = filter_axis(v, s, axis, g, t);
    s = t;
  }
  return v;
}

}  // namespace

double ssim3d(const Volume& a, const Volume& b, double data_range, const SsimParams& p) {
  check_pair(a, b, data_range, "ssim3d");
  if (p.window < 1 || p.window % 2 == 0 || !(p.sigma > 0.0)) throw ConfigError("ssim3d: window must be odd and sigma positive");
  const Shape3 s = a.shape();
  if (s.d < p.window || s.h < p.window || s.w < p.window) {
    throw ShapeError("ssim3d: volume " + to_string(s) + " is smaller than the " + std::to_string(p.window) + "^3 window");
  }
  const auto n = static_cast<std::size_t>(s.voxels());
  std::vector<double> va(n), vb(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    va[i] = a.data()[i];
    vb[i] = b.data()[i];
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto g = gaussian_taps(p.window, p.sigma);
  const auto mu_a = filter3(std::move(va), s, g);
  const auto mu_b = filter3(std::move(vb), s, g);
  const auto e_aa = filter3(std::move(aa), s, g);
  const auto e_bb = filter3(std::move(bb), s, g);
  const auto e_ab = filter3(std::move(ab), s, g);
  const double c1 = (p.k1 * data_range) * (p.k1 * data_range);
  const double c2 = (p.k2 * data_range) * (p.k2 * data_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double s_aa = e_aa[i] - mu_a[i] * mu_a[i];
    const double s_bb = e_bb[i] - mu_b[i] * mu_b[i];
    const double s_ab = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * s_ab + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (s_aa + s_bb + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

double psnr(const Volume& a, const Volume& b, double data_range) {
  check_pair(a, b, data_range, "psnr");
  double sse = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[static_cast<std::size_t>(i)]) - b.data()[static_cast<std::size_t>(i)];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.size());
  return 10.0 * std::log10(data_range * data_range / mse);
}

double feature_distance(const Volume& a, const Volume& b, const models::FeatureExtractor2D& fx) {
  nn::NoGradGuard guard;
  return losses::perceptual_2_5d(nn::to_tensor(a), nn::to_tensor(b), fx).item();
}

double default_data_range(const Volume& reference) {
  const double r = static_cast<double>(reference.max_value()) - reference.min_value();
  return r > 0.0 ? r : 1.0;
}

MetricsReport evaluate(const Volume& estimate, const Volume& reference, double data_range,
                       const models::FeatureExtractor2D* fx) {
  MetricsReport r;
  r.data_range = data_range;
  r.ssim = ssim3d(estimate, reference, data_range);
  r.psnr = psnr(estimate, reference, data_range);
  if (fx != nullptr) r.feature_distance = feature_distance(estimate, reference, *fx);
  return r;
}

void write_report_header(std::ostream& os) { os << "volume_id,method,ssim,psnr,feature_distance,data_range\n"; }

void write_report_row(std::ostream& os, const std::string& volume_id, const std::string& method,
                      const MetricsReport& r) {
  auto f = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << volume_id << ',' << method << ',' << f(r.ssim) << ',' << f(r.psnr) << ','
     << (r.feature_distance ? f(*r.feature_distance) : std::string()) << ',' << f(r.data_range) << '\n';
}

}  // namespace volsr::metrics
