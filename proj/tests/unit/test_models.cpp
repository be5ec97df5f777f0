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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"
#include "volsr/error.hpp"
#include "volsr/models/discriminator.hpp"
#include "volsr/models/feature_extractor.hpp"
#include "volsr/models/generator.hpp"
#include "volsr/nn/ops.hpp"

using namespace volsr;
using namespace volsr::models;
using nn::Shape;
using nn::Tensor;
using volsr::test::random_tensor;

namespace {

GeneratorConfig micro_generator() {
  GeneratorConfig c;
  c.nf = 2;
  c.gc = 2;
  c.num_blocks = 1;
  return c;
}

nn::ParamStore zeroed(const nn::ParamStore& s) {
  nn::ParamStore z = s.clone();
  for (auto& [name, t] : z.items())
    for (double& v : t.mutable_data()) v = 0.0;
  return z;
}

std::vector<Tensor> leaves_of(const nn::ParamStore& s) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : s.items()) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("generator config validation and JSON") {
  GeneratorConfig c;
  CHECK(c.nf == 16);
  CHECK(c.gc == 8);
  CHECK(c.num_blocks == 4);
  CHECK(c.residual_scale == 0.2);
  CHECK(c.upsample_stages() == 2);
  CHECK_NOTHROW(c.validate());
  GeneratorConfig bad = c;
  bad.upscale = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.residual_scale = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.rdb_per_rrdb = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  nlohmann::json j = c;
  CHECK(j.get<GeneratorConfig>().nf == 16);
}

TEST_CASE("generator shape contract") {
  const GeneratorConfig cfg = micro_generator();
  const auto p = init_generator(cfg, 1);
  nn::NoGradGuard guard;
  for (Shape s : {Shape{1, 1, 4, 4, 4}, Shape{1, 1, 5, 7, 4}, Shape{2, 1, 6, 4, 5}}) {
    const Tensor y = generator_forward(random_tensor(s, 2, 0, 1, false), p, cfg);
    CHECK(y.shape() == Shape{s[0], 1, 4 * s[2], 4 * s[3], 4 * s[4]});
    for (double v : y.data()) CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(generator_forward(random_tensor({1, 1, 3, 4, 4}, 2), p, cfg), ShapeError);
  CHECK_THROWS_AS(generator_forward(random_tensor({1, 2, 4, 4, 4}, 2), p, cfg), ShapeError);
}

TEST_CASE("generator init is deterministic in the seed") {
  const GeneratorConfig cfg = micro_generator();
  CHECK(init_generator(cfg, 5) == init_generator(cfg, 5));
  CHECK_FALSE(init_generator(cfg, 5) == init_generator(cfg, 6));
  const auto store = init_generator(cfg, 5);
  for (const auto& [name, t] : store.items()) {
    if (name.ends_with(".b")) {
      for (double v : t.data()) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("zero-parameter and zero-beta dense blocks are identities") {
  GeneratorConfig cfg = micro_generator();
  const auto p = init_generator(cfg, 3);
  const Tensor x = random_tensor({1, cfg.nf, 4, 3, 5}, 4, -1, 1, false);
  const ParamView block(p, "rrdb0.");
  const auto z = zeroed(p);
  const ParamView zblock(z, "rrdb0.");
  CHECK(volsr::test::max_abs_diff(rdb_forward(x, zblock.sub("rdb0"), cfg).data(), x.data()) == 0.0);
  CHECK(volsr::test::max_abs_diff(rrdb_forward(x, zblock, cfg).data(), x.data()) == 0.0);

  cfg.residual_scale = 0.0;
  CHECK(volsr::test::max_abs_diff(rdb_forward(x, block.sub("rdb0"), cfg).data(), x.data()) == 0.0);
  CHECK(volsr::test::max_abs_diff(rrdb_forward(x, block, cfg).data(), x.data()) == 0.0);

  cfg.residual_scale = 0.2;
  const Tensor y = rrdb_forward(x, block, cfg);
  CHECK(y.shape() == x.shape());
  CHECK(volsr::test::max_abs_diff(y.data(), x.data()) > 0.0);
  CHECK_THROWS_AS(rdb_forward(random_tensor({1, 3, 4, 4, 4}, 1), block.sub("rdb0"), cfg), ShapeError);
}

TEST_CASE("fresh generator stays close to nearest upsampling of its input") {
  const GeneratorConfig cfg;  // defaults
  const auto p = init_generator(cfg, 11);
  const Tensor x = random_tensor({1, 1, 6, 6, 6}, 12, 0, 1, false);
  nn::NoGradGuard guard;
  const Tensor y = generator_forward(x, p, cfg);
  const Tensor up = nn::upsample_nearest3d(x, 4);
  const double mae = nn::mean_abs_diff(y, up).item();
  const auto [mn, mx] = std::minmax_element(x.data().begin(), x.data().end());
  CHECK(mae < *mx - *mn);
}

TEST_CASE("generator gradients on a micro instance") {
  const GeneratorConfig cfg = micro_generator();
  const auto p = init_generator(cfg, 21);
  Tensor x = random_tensor({1, 1, 4, 4, 4}, 22, 0, 1, true);
  auto leaves = leaves_of(p);
  leaves.push_back(x);
  volsr::test::GradCheckOptions o;
  o.every = 5;
  o.floor = 1e-5;
  o.piecewise_linear = true;
  const auto r = volsr::test::grad_check([&] { return volsr::test::probe(generator_forward(x, p, cfg)); }, leaves, o);
  INFO(r.worst);
  INFO("kinks: " << r.kinks);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("discriminator shape contract and logits") {
  DiscriminatorConfig cfg;
  CHECK(cfg.base_channels == 16);
  CHECK(cfg.depth == 3);
  CHECK(cfg.required_multiple() == 8);
  DiscriminatorConfig small{1, 2, 2, 0.2};
  const auto p = init_discriminator(small, 1);
  nn::NoGradGuard guard;
  for (Shape s : {Shape{1, 1, 16, 16, 16}, Shape{1, 1, 4, 8, 12}, Shape{2, 1, 8, 4, 4}}) {
    const Tensor y = discriminator_forward(random_tensor(s, 3, 0, 1, false), p, small);
    CHECK(y.shape() == s);
    const Tensor prob = nn::sigmoid(y);
    for (double v : prob.data()) CHECK((v > 0.0 && v < 1.0));
  }
  CHECK_THROWS_AS(discriminator_forward(random_tensor({1, 1, 6, 8, 8}, 3), p, small), ShapeError);
  DiscriminatorConfig bad = small;
  bad.depth = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(init_discriminator(small, 9) == init_discriminator(small, 9));
  CHECK(nlohmann::json(small).get<DiscriminatorConfig>().base_channels == 2);
}

TEST_CASE("discriminator gradients on a micro instance") {
  const DiscriminatorConfig cfg{1, 2, 2, 0.2};
  const auto p = init_discriminator(cfg, 31);
  const Tensor x = random_tensor({1, 1, 8, 8, 8}, 32, 0, 1, true);
  auto leaves = leaves_of(p);
  leaves.push_back(x);
  volsr::test::GradCheckOptions o;
  o.every = 3;
  o.floor = 1e-5;
  o.piecewise_linear = true;
  const auto r = volsr::test::grad_check([&] { return volsr::test::probe(discriminator_forward(x, p, cfg)); }, leaves, o);
  INFO(r.worst);
  INFO("kinks: " << r.kinks);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("feature extractor configuration") {
  const auto c = FeatureExtractorConfig::standard();
  REQUIRE(c.layers.size() == 4);
  CHECK(c.layers[0].out_channels == 8);
  CHECK(c.layers[3].out_channels == 32);
  CHECK(c.num_taps() == 2);
  CHECK(c.min_extent() == 4);
  FeatureExtractorConfig none = c;
  for (auto& l : none.layers) l.tap = false;
  CHECK_THROWS_AS(none.validate(), ConfigError);
  nlohmann::json j = c;
  const auto back = j.get<FeatureExtractorConfig>();
  CHECK(back.layers[1].tap);
  CHECK(back.layers[2].pool_after);
}

TEST_CASE("feature extractor outputs, determinism and errors") {
  const auto fx = FeatureExtractor2D::random(FeatureExtractorConfig::standard(), 7);
  const Tensor s = random_tensor({3, 1, 8, 12}, 8, 0, 1, false);
  const auto f = fx.extract(s);
  REQUIRE(f.size() == 2);
  CHECK(f[0].shape() == Shape{3, 16, 8, 12});
  CHECK(f[1].shape() == Shape{3, 32, 2, 3});
  const auto g = FeatureExtractor2D::random(FeatureExtractorConfig::standard(), 7).extract(s);
  CHECK(volsr::test::max_abs_diff(f[1].data(), g[1].data()) == 0.0);
  for (const auto& [name, t] : fx.weights().items()) CHECK_FALSE(t.requires_grad());
  CHECK_THROWS_AS(fx.extract(random_tensor({1, 1, 3, 8}, 1)), ShapeError);
  CHECK_THROWS_AS(fx.extract(random_tensor({1, 2, 8, 8}, 1)), ShapeError);
}

TEST_CASE("identity-initialized single block reproduces its input") {
  FeatureExtractorConfig cfg;
  cfg.layers = {{1, true, false}};
  nn::ParamStore w;
  std::vector<double> k(9, 0.0);
  k[4] = 1.0;
  w.add("block0.w", Tensor::from_data({1, 1, 3, 3}, k));
  w.add("block0.b", Tensor::zeros({1}));
  const FeatureExtractor2D fx(cfg, w);
  const Tensor s = random_tensor({2, 1, 5, 6}, 9, 0, 1, false);
  CHECK(volsr::test::max_abs_diff(fx.extract(s)[0].data(), s.data()) == 0.0);

  nn::ParamStore wrong;
  wrong.add("block0.w", Tensor::zeros({1, 1, 5, 5}));
  wrong.add("block0.b", Tensor::zeros({1}));
  CHECK_THROWS_AS(FeatureExtractor2D(cfg, wrong), ShapeError);
  CHECK_THROWS_AS(FeatureExtractor2D(cfg, nn::ParamStore{}), ConfigError);
}

TEST_CASE("feature extractor save and load") {
  volsr::test::TempDir dir;
  const auto fx = FeatureExtractor2D::random(FeatureExtractorConfig::standard(), 3);
  fx.save(dir / "fx.ckpt");
  const auto back = FeatureExtractor2D::load(dir / "fx.ckpt");
  CHECK(back.weights() == fx.weights());
  CHECK(back.config().layers.size() == 4);
  nn::save_checkpoint(dir / "other.ckpt", fx.weights(), {{"kind", "generator"}});
  CHECK_THROWS_AS(FeatureExtractor2D::load(dir / "other.ckpt"), MalformedHeaderError);
}

TEST_CASE("feature extractor passes gradients to its input") {
  const auto fx = FeatureExtractor2D::random(FeatureExtractorConfig::standard(), 4);
  const Tensor s = random_tensor({2, 1, 8, 8}, 5, 0, 1, true);
  const auto r = volsr::test::grad_check(
      [&] {
        const auto f = fx.extract(s);
        return nn::add(volsr::test::probe(f[0]), volsr::test::probe(f[1]));
      },
      {s});
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-4);
}
