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

#include "volsr/models/generator.hpp"

#include <cmath>
#include <string>

#include "volsr/error.hpp"
#include "volsr/nn/ops.hpp"

namespace volsr::models {

namespace {

void add_conv(nn::ParamStore& store, const std::string& name, int cin, int cout, int k, double gain, Rng& rng) {
  const std::int64_t fan_in = static_cast<std::int64_t>(cin) * k * k * k;
  const double stddev = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<double> w(static_cast<std::size_t>(cout * fan_in));
  for (double& v : w) v = rng.normal(0.0, stddev);
  store.add(name + ".w", nn::Tensor::from_data({cout, cin, k, k, k}, std::move(w)));
  store.add(name + ".b", nn::Tensor::zeros({cout}));
}

nn::Tensor conv(const nn::Tensor& x, const ParamView& p, const std::string& name) {
  return nn::conv3d(x, p.at(name + ".w"), p.at(name + ".b"), 1, 1);
}

}  // namespace

void GeneratorConfig::validate() const {
  if (in_channels < 1 || nf < 1 || gc < 1 || num_blocks < 1) {
    throw ConfigError("generator: in_channels, nf, gc and num_blocks must be >= 1");
  }
  if (rdb_per_rrdb != 3 || convs_per_rdb != 5) throw ConfigError("generator: RRDB structure is fixed at 3 x 5 convs");
  if (!(residual_scale > 0.0 && residual_scale <= 1.0)) throw ConfigError("generator: residual scale must be in (0, 1]");
  if (upscale < 2 || (upscale & (upscale - 1)) != 0) throw ConfigError("generator: upscale must be a power of two");
}

int GeneratorConfig::upsample_stages() const {
  int s = 0;
  for (int u = upscale; u > 1; u >>= 1) ++s;
  return s;
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"in_channels", c.in_channels},   {"nf", c.nf},
       {"gc", c.gc},                     {"num_blocks", c.num_blocks},
       {"rdb_per_rrdb", c.rdb_per_rrdb}, {"convs_per_rdb", c.convs_per_rdb},
       {"residual_scale", c.residual_scale}, {"upscale", c.upscale},
       {"slope", c.slope}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  c.in_channels = j.value("in_channels", c.in_channels);
  c.nf = j.value("nf", c.nf);
  c.gc = j.value("gc", c.gc);
  c.num_blocks = j.value("num_blocks", c.num_blocks);
  c.rdb_per_rrdb = j.value("rdb_per_rrdb", c.rdb_per_rrdb);
  c.convs_per_rdb = j.value("convs_per_rdb", c.convs_per_rdb);
  c.residual_scale = j.value("residual_scale", c.residual_scale);
  c.upscale = j.value("upscale", c.upscale);
  c.slope = j.value("slope", c.slope);
}

void add_rdb_params(nn::ParamStore& store, const std::string& prefix, const GeneratorConfig& cfg, Rng& rng,
                    double gain) {
  for (int i = 0; i < cfg.convs_per_rdb; ++i) {
    const int cin = cfg.nf + i * cfg.gc;
    const int cout = (i + 1 == cfg.convs_per_rdb) ? cfg.nf : cfg.gc;
    add_conv(store, prefix + "conv" + std::to_string(i), cin, cout, 3, gain, rng);
  }
}

nn::ParamStore init_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  nn::ParamStore store;
  add_conv(store, "head", cfg.in_channels, cfg.nf, 3, 1.0, rng);
  for (int b = 0; b < cfg.num_blocks; ++b) {
    for (int r = 0; r < cfg.rdb_per_rrdb; ++r) {
      add_rdb_params(store, "rrdb" + std::to_string(b) + ".rdb" + std::to_string(r) + ".", cfg, rng);
    }
  }
  add_conv(store, "trunk", cfg.nf, cfg.nf, 3, 1.0, rng);
  for (int s = 0; s < cfg.upsample_stages(); ++s) add_conv(store, "up" + std::to_string(s), cfg.nf, cfg.nf, 3, 1.0, rng);
  add_conv(store, "hr", cfg.nf, cfg.nf, 3, 1.0, rng);
  add_conv(store, "last", cfg.nf, cfg.in_channels, 3, 0.1, rng);
  return store;
}

nn::Tensor rdb_forward(const nn::Tensor& x, const ParamView& params, const GeneratorConfig& cfg) {
  if (x.ndim() != 5 || x.dim(1) != cfg.nf) {
    throw ShapeError("rdb_forward: expected (N," + std::to_string(cfg.nf) + ",D,H,W), got " + nn::to_string(x.shape()));
  }
  std::vector<nn::Tensor> features{x};
  nn::Tensor out;
  for (int i = 0; i < cfg.convs_per_rdb; ++i) {
    const nn::Tensor in = features.size() == 1 ? x : nn::concat_channels(features);
    out = conv(in, params, "conv" + std::to_string(i));
    if (i + 1 < cfg.convs_per_rdb) {
      out = nn::leaky_relu(out, cfg.slope);
      features.push_back(out);
    }
  }
  return nn::add_scaled(x, out, cfg.residual_scale);
}

nn::Tensor rrdb_forward(const nn::Tensor& x, const ParamView& params, const GeneratorConfig& cfg) {
  nn::Tensor h = x;
  for (int r = 0; r < cfg.rdb_per_rrdb; ++r) h = rdb_forward(h, params.sub("rdb" + std::to_string(r)), cfg);
  // The outer residual scales the chain's increment, so zero blocks give x.
  return nn::add_scaled(x, nn::sub(h, x), cfg.residual_scale);
}

nn::Tensor generator_forward(const nn::Tensor& lr, const ParamView& params, const GeneratorConfig& cfg) {
  cfg.validate();
  if (lr.ndim() != 5 || lr.dim(1) != cfg.in_channels) {
    throw ShapeError("generator: expected (N," + std::to_string(cfg.in_channels) + ",d,h,w), got " +
                     nn::to_string(lr.shape()));
  }
  for (int a = 2; a < 5; ++a) {
    if (lr.dim(a) < GeneratorConfig::kMinInputExtent) {
      throw ShapeError("generator: input " + nn::to_string(lr.shape()) + " is undersized (each spatial extent must be >= " +
                       std::to_string(GeneratorConfig::kMinInputExtent) + ")");
    }
  }
  const nn::Tensor fea = conv(lr, params, "head");
  nn::Tensor trunk = fea;
  for (int b = 0; b < cfg.num_blocks; ++b) trunk = rrdb_forward(trunk, params.sub("rrdb" + std::to_string(b)), cfg);
  nn::Tensor h = nn::add(fea, conv(trunk, params, "trunk"));
  for (int s = 0; s < cfg.upsample_stages(); ++s) {
    h = nn::leaky_relu(conv(nn::upsample_nearest3d(h, 2), params, "up" + std::to_string(s)), cfg.slope);
  }
  h = nn::leaky_relu(conv(h, params, "hr"), cfg.slope);
  return conv(h, params, "last");
}

}  // namespace volsr::models
