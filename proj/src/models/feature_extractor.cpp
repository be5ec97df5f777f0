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

#include "volsr/models/feature_extractor.hpp"

#include <cmath>
#include <string>

#include "volsr/error.hpp"
#include "volsr/nn/ops.hpp"
#include "volsr/rng.hpp"

namespace volsr::models {

namespace {

constexpr const char* kKind = "feature_extractor_2d";

std::string block_name(std::size_t i) { return "block" + std::to_string(i); }

}  // namespace

FeatureExtractorConfig FeatureExtractorConfig::standard() {
  FeatureExtractorConfig c;
  c.layers = {{8, false, false}, {16, true, true}, {32, false, true}, {32, true, false}};
  return c;
}

void FeatureExtractorConfig::validate() const {
  if (in_channels < 1) throw ConfigError("feature extractor: in_channels must be >= 1");
  if (layers.empty()) throw ConfigError("feature extractor: at least one block is required");
  for (const auto& l : layers) {
    if (l.out_channels < 1) throw ConfigError("feature extractor: block channels must be >= 1");
  }
  if (num_taps() == 0) throw ConfigError("feature extractor: no tapped blocks");
}

std::int64_t FeatureExtractorConfig::min_extent() const {
  // A pool after the last tapped block does not constrain the output.
  std::size_t last_tap = 0;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].tap) last_tap = i;
  std::int64_t m = 1;
  for (std::size_t i = 0; i < last_tap; ++i)
    if (layers[i].pool_after) m *= 2;
  return m;
}

int FeatureExtractorConfig::num_taps() const {
  int n = 0;
  for (const auto& l : layers) n += l.tap ? 1 : 0;
  return n;
}

void to_json(nlohmann::json& j, const FeatureExtractorConfig& c) {
  j = {{"in_channels", c.in_channels}, {"slope", c.slope}, {"layers", nlohmann::json::array()}};
  for (const auto& l : c.layers) {
    j["layers"].push_back({{"out_channels", l.out_channels}, {"tap", l.tap}, {"pool_after", l.pool_after}});
  }
}

void from_json(const nlohmann::json& j, FeatureExtractorConfig& c) {
  c.in_channels = j.value("in_channels", 1);
  c.slope = j.value("slope", 0.2);
  c.layers.clear();
  for (const auto& l : j.at("layers")) {
    c.layers.push_back({l.at("out_channels").get<int>(), l.value("tap", false), l.value("pool_after", false)});
  }
}

FeatureExtractor2D::FeatureExtractor2D(FeatureExtractorConfig cfg, const nn::ParamStore& weights)
    : cfg_(std::move(cfg)), weights_(weights.clone(/*frozen=*/true)) {
  cfg_.validate();
  int cin = cfg_.in_channels;
  for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
    const int cout = cfg_.layers[i].out_channels;
    const std::string n = block_name(i);
    if (!weights_.contains(n + ".w") || !weights_.contains(n + ".b")) {
      throw ConfigError("feature extractor: missing weights for " + n);
    }
    if (weights_.at(n + ".w").shape() != nn::Shape{cout, cin, 3, 3} || weights_.at(n + ".b").shape() != nn::Shape{cout}) {
      throw ShapeError("feature extractor: weights for " + n + " do not match the declared layer");
    }
    cin = cout;
  }
  if (weights_.size() != 2 * cfg_.layers.size()) throw ConfigError("feature extractor: unexpected extra weights");
}

FeatureExtractor2D FeatureExtractor2D::random(const FeatureExtractorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  nn::ParamStore store;
  int cin = cfg.in_channels;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const int cout = cfg.layers[i].out_channels;
    const double stddev = std::sqrt(2.0 / (cin * 9.0));
    std::vector<double> w(static_cast<std::size_t>(cout) * cin * 9);
    for (double& v : w) v = rng.normal(0.0, stddev);
    store.add(block_name(i) + ".w", nn::Tensor::from_data({cout, cin, 3, 3}, std::move(w)));
    store.add(block_name(i) + ".b", nn::Tensor::zeros({cout}));
    cin = cout;
  }
  return FeatureExtractor2D(cfg, store);
}

FeatureExtractor2D FeatureExtractor2D::load(const std::filesystem::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  if (ck.metadata.value("kind", "") != kKind || !ck.metadata.contains("config")) {
    throw MalformedHeaderError("feature extractor: " + path.string() + " is not a feature extractor checkpoint");
  }
  return FeatureExtractor2D(ck.metadata.at("config").get<FeatureExtractorConfig>(), ck.params);
}

void FeatureExtractor2D::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, weights_, {{"kind", kKind}, {"config", cfg_}});
}

std::vector<nn::Tensor> FeatureExtractor2D::extract(const nn::Tensor& slices) const {
  if (slices.ndim() != 4 || slices.dim(1) != cfg_.in_channels) {
    throw ShapeError("feature extractor: expected (N," + std::to_string(cfg_.in_channels) + ",H,W), got " +
                     nn::to_string(slices.shape()));
  }
  const std::int64_t m = min_extent();
  if (slices.dim(2) < m || slices.dim(3) < m) {
    throw ShapeError("feature extractor: slice " + std::to_string(slices.dim(2)) + "x" + std::to_string(slices.dim(3)) +
                     " is undersized (minimum " + std::to_string(m) + ")");
  }
  std::vector<nn::Tensor> taps;
  nn::Tensor h = slices;
  const int wanted = cfg_.num_taps();
  for (std::size_t i = 0; i < cfg_.layers.size() && static_cast<int>(taps.size()) < wanted; ++i) {
    const std::string n = block_name(i);
    h = nn::leaky_relu(nn::conv2d(h, weights_.at(n + ".w"), weights_.at(n + ".b"), 1, 1), cfg_.slope);
    if (cfg_.layers[i].tap) taps.push_back(h);
    if (cfg_.layers[i].pool_after && static_cast<int>(taps.size()) < wanted) h = nn::max_pool2d(h, 2);
  }
  return taps;
}

}  // namespace volsr::models
