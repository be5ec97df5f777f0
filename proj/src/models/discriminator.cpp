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

#include "volsr/models/discriminator.hpp"

#include <cmath>
#include <string>

#include "volsr/error.hpp"
#include "volsr/nn/ops.hpp"
#include "volsr/rng.hpp"

namespace volsr::models {

namespace {

void add_conv(nn::ParamStore& store, const std::string& name, int cin, int cout, int k, Rng& rng) {
  const std::int64_t fan_in = static_cast<std::int64_t>(cin) * k * k * k;
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<double> w(static_cast<std::size_t>(cout * fan_in));
  for (double& v : w) v = rng.normal(0.0, stddev);
  store.add(name + ".w", nn::Tensor::from_data({cout, cin, k, k, k}, std::move(w)));
  store.add(name + ".b", nn::Tensor::zeros({cout}));
}

int level_channels(const DiscriminatorConfig& c, int level) { return c.base_channels << level; }

}  // namespace

void DiscriminatorConfig::validate() const {
  if (in_channels < 1 || base_channels < 1) throw ConfigError("discriminator: channel counts must be >= 1");
  if (depth < 1 || depth > 8) throw ConfigError("discriminator: depth must be in [1, 8]");
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = {{"in_channels", c.in_channels}, {"base_channels", c.base_channels}, {"depth", c.depth}, {"slope", c.slope}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  c.in_channels = j.value("in_channels", c.in_channels);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.depth = j.value("depth", c.depth);
  c.slope = j.value("slope", c.slope);
}

nn::ParamStore init_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  nn::ParamStore store;
  int cin = cfg.in_channels;
  for (int l = 0; l < cfg.depth; ++l) {
    add_conv(store, "enc" + std::to_string(l), cin, level_channels(cfg, l), 3, rng);
    cin = level_channels(cfg, l);
  }
  add_conv(store, "bottleneck", cin, level_channels(cfg, cfg.depth), 3, rng);
  for (int l = cfg.depth - 1; l >= 0; --l) {
    add_conv(store, "dec" + std::to_string(l), level_channels(cfg, l + 1) + level_channels(cfg, l),
             level_channels(cfg, l), 3, rng);
  }
  add_conv(store, "out", level_channels(cfg, 0), 1, 1, rng);
  return store;
}

nn::Tensor discriminator_forward(const nn::Tensor& x, const ParamView& params, const DiscriminatorConfig& cfg) {
  cfg.validate();
  if (x.ndim() != 5 || x.dim(1) != cfg.in_channels) {
    throw ShapeError("discriminator: expected (N," + std::to_string(cfg.in_channels) + ",D,H,W), got " +
                     nn::to_string(x.shape()));
  }
  const std::int64_t q = cfg.required_multiple();
  for (int a = 2; a < 5; ++a) {
    if (x.dim(a) % q != 0) {
      throw ShapeError("discriminator: spatial dims " + nn::to_string(x.shape()) + " must be divisible by 2^depth = " +
                       std::to_string(q));
    }
  }
  auto conv = [&](const nn::Tensor& in, const std::string& name, int pad) {
    return nn::conv3d(in, params.at(name + ".w"), params.at(name + ".b"), 1, pad);
  };
  std::vector<nn::Tensor> skips;
  nn::Tensor h = x;
  for (int l = 0; l < cfg.depth; ++l) {
    h = nn::leaky_relu(conv(h, "enc" + std::to_string(l), 1), cfg.slope);
    skips.push_back(h);
    h = nn::avg_pool3d(h, 2);
  }
  h = nn::leaky_relu(conv(h, "bottleneck", 1), cfg.slope);
  for (int l = cfg.depth - 1; l >= 0; --l) {
    h = nn::concat_channels({nn::upsample_nearest3d(h, 2), skips[static_cast<std::size_t>(l)]});
    h = nn::leaky_relu(conv(h, "dec" + std::to_string(l), 1), cfg.slope);
  }
  return conv(h, "out", 0);
}

}  // namespace volsr::models
