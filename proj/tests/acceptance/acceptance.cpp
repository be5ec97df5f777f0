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

// Acceptance driver: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number, e.g. `volsr_acceptance 1 3 8`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "test_support.hpp"
#include "volsr/losses.hpp"
#include "volsr/metrics.hpp"
#include "volsr/models/discriminator.hpp"
#include "volsr/models/feature_extractor.hpp"
#include "volsr/models/generator.hpp"
#include "volsr/nn/ops.hpp"
#include "volsr/pipeline.hpp"
#include "volsr/spectral.hpp"

using namespace volsr;
using nn::Shape;
using nn::Tensor;
using volsr::test::random_tensor;
using volsr::test::random_volume;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Criterion = std::function<void(Verdict&)>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Spectral correctness

void spectral(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (Shape3 s : {Shape3{8, 6, 4}, Shape3{4, 4, 4}, Shape3{5, 3, 7}, Shape3{1, 6, 2}, Shape3{8, 1, 3}}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Volume vol = random_volume(s, seed, -1.0, 1.0);
      const auto ref = volsr::test::naive_dft3(vol);
      const Spectrum3D got = dft3_forward(vol);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        num = std::max(num, std::abs(got.bins[i] - ref[i]));
        den = std::max(den, std::abs(ref[i]));
      }
      worst = std::max(worst, num / den);
    }
  }
  v.require(worst <= 1e-5, "dft3_forward vs naive sum");
  v.detail << "dft rel err " << worst << "; ";

  // Band-limit suite on 16^3 at scale 4: cutoff 2 cycles per edge.
  const Shape3 s{16, 16, 16};
  const int scale = 4;
  const auto coord = [&](std::int64_t i) { return static_cast<double>(scale * i + scale / 2 - 1); };
  double pass_err = 0.0, stop_err = 0.0;
  int cases = 0;
  for (int fz = 0; fz <= 4; ++fz)
    for (int fy = 0; fy <= 4; ++fy)
      for (int fx = 0; fx <= 4; ++fx) {
        const Volume lr = kspace_degrade(volsr::test::cosine_volume(s, fz, fy, fx), scale);
        const bool passes = fz < 2 && fy < 2 && fx < 2;
        const double tau = 2.0 * std::numbers::pi / 16.0;
        for (std::int64_t z = 0; z < lr.shape().d; ++z)
          for (std::int64_t y = 0; y < lr.shape().h; ++y)
            for (std::int64_t x = 0; x < lr.shape().w; ++x) {
              const double expect = passes ? std::cos(tau * fz * coord(z)) * std::cos(tau * fy * coord(y)) *
                                                 std::cos(tau * fx * coord(x))
                                           : 0.0;
              double& e = passes ? pass_err : stop_err;
              e = std::max(e, std::fabs(lr.at(z, y, x) - expect));
            }
        ++cases;
      }
  v.require(pass_err <= 1e-3, "sub-cutoff cosines preserved");
  v.require(stop_err <= 1e-3, "supra-cutoff cosines annihilated");
  const double t = seconds_since(t0);
  v.require(t < 30.0, "runtime < 30 s");
  v.detail << cases << " cosines, pass err " << pass_err << ", stop err " << stop_err;
}

// ---------------------------------------------------------------------------
// 2. Gradient integrity

struct GradCase {
  std::string name;
  std::function<Tensor()> f;
  std::vector<Tensor> leaves;
  bool piecewise_linear = false;
  std::size_t every = 1;
  double floor = 1e-6;
};

std::vector<Tensor> leaves_of(const nn::ParamStore& s) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : s.items()) out.push_back(t);
  return out;
}

void gradients(Verdict& v) {
  using volsr::test::probe;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<GradCase> cases;
  const auto rt = [](Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    return random_tensor(std::move(s), seed, lo, hi, true);
  };

  {
    Tensor a = rt({2, 3, 4}, 1), b = rt({2, 3, 4}, 2);
    cases.push_back({"add", [=] { return probe(nn::add(a, b)); }, {a, b}});
    cases.push_back({"sub", [=] { return probe(nn::sub(a, b)); }, {a, b}});
    cases.push_back({"mul", [=] { return probe(nn::mul(a, b)); }, {a, b}});
    cases.push_back({"scale", [=] { return probe(nn::scale(a, -1.7)); }, {a}});
    cases.push_back({"add_scaled", [=] { return probe(nn::add_scaled(a, b, 0.3)); }, {a, b}});
    cases.push_back({"sum", [=] { return nn::sum(nn::mul(a, a)); }, {a}});
    cases.push_back({"mean", [=] { return nn::mean(nn::mul(a, b)); }, {a, b}});
    cases.push_back({"leaky_relu", [=] { return probe(nn::leaky_relu(a, 0.2)); }, {a}, true});
    cases.push_back({"sigmoid", [=] { return probe(nn::sigmoid(a)); }, {a}});
    cases.push_back({"reshape", [=] { return probe(nn::reshape(a, {4, 6})); }, {a}});
    cases.push_back({"mean_abs_diff", [=] { return nn::mean_abs_diff(a, b); }, {a, b}, true});
    cases.push_back({"bce_with_logits_mean", [=] { return nn::bce_with_logits_mean(a, 1.0); }, {a}});
    cases.push_back({"bce_with_logits_mean (0)", [=] { return nn::bce_with_logits_mean(a, 0.0); }, {a}});
  }
  {
    Tensor x = rt({2, 2, 4, 5, 3}, 3), w = rt({3, 2, 3, 3, 3}, 4), b = rt({3}, 5);
    cases.push_back({"conv3d", [=] { return probe(nn::conv3d(x, w, b, 1, 1)); }, {x, w, b}});
    Tensor xs = rt({1, 2, 5, 5, 5}, 6);
    cases.push_back({"conv3d stride 2", [=] { return probe(nn::conv3d(xs, w, b, 2, 1)); }, {xs, w, b}});
    Tensor x2 = rt({2, 2, 5, 6}, 7), w2 = rt({3, 2, 3, 3}, 8), b2 = rt({3}, 9);
    cases.push_back({"conv2d", [=] { return probe(nn::conv2d(x2, w2, b2, 1, 1)); }, {x2, w2, b2}});
    Tensor u = rt({1, 2, 2, 3, 2}, 10);
    cases.push_back({"upsample_nearest3d", [=] { return probe(nn::upsample_nearest3d(u, 2)); }, {u}});
    Tensor p = rt({1, 2, 4, 4, 6}, 11);
    cases.push_back({"avg_pool3d", [=] { return probe(nn::avg_pool3d(p, 2)); }, {p}});
    Tensor m = rt({2, 2, 5, 6}, 12);
    cases.push_back({"max_pool2d", [=] { return probe(nn::max_pool2d(m, 2)); }, {m}, true});
    Tensor c1 = rt({1, 2, 3, 2, 2}, 13), c2 = rt({1, 3, 3, 2, 2}, 14);
    cases.push_back({"concat_channels", [=] { return probe(nn::concat_channels({c1, c2})); }, {c1, c2}});
    Tensor vs = rt({2, 1, 3, 4, 5}, 15);
    for (Axis axis : {Axis::Axial, Axis::Coronal, Axis::Sagittal})
      cases.push_back({"view_slices axis " + std::to_string(static_cast<int>(axis)),
                       [=] { return probe(nn::view_slices(vs, axis, 2)); },
                       {vs}});
  }

  // Composite losses.
  static const auto fx =
      models::FeatureExtractor2D::random(models::FeatureExtractorConfig::standard(), 17);
  {
    Tensor sr = rt({1, 1, 4, 4, 4}, 20, 0.0, 1.0), hr = random_tensor({1, 1, 4, 4, 4}, 21, 0.0, 1.0, false);
    cases.push_back({"perceptual_2_5d", [=] { return losses::perceptual_2_5d(sr, hr, fx); }, {sr}, true});
    Tensor ds = rt({1, 1, 2, 3, 4}, 22, -3.0, 3.0), dh = rt({1, 1, 2, 3, 4}, 23, -3.0, 3.0);
    cases.push_back({"adversarial (discriminator)",
                     [=] { return losses::adversarial_losses(ds, dh).discriminator; },
                     {ds, dh}});
    cases.push_back({"adversarial (generator)", [=] { return losses::generator_adversarial_loss(ds); }, {ds}});
  }

  // Full networks on micro configs with 4^3 LR inputs.
  models::GeneratorConfig gcfg;
  gcfg.nf = 2;
  gcfg.gc = 2;
  gcfg.num_blocks = 1;
  static const auto gp = models::init_generator(gcfg, 21);
  Tensor glr = rt({1, 1, 4, 4, 4}, 22, 0.0, 1.0);
  auto gl = leaves_of(gp);
  gl.push_back(glr);
  cases.push_back(
      {"generator", [=] { return probe(models::generator_forward(glr, gp, gcfg)); }, gl, true, 1, 1e-5});

  const models::DiscriminatorConfig dcfg{1, 2, 2, 0.2};
  static const auto dp = models::init_discriminator(dcfg, 31);
  // The critic sees HR-sized inputs: a 4^3 LR input upsampled by 4 is 16^3.
  Tensor dx = rt({1, 1, 16, 16, 16}, 32, 0.0, 1.0);
  auto dl = leaves_of(dp);
  dl.push_back(dx);
  cases.push_back(
      {"discriminator", [=] { return probe(models::discriminator_forward(dx, dp, dcfg)); }, dl, true, 1, 1e-5});

  double worst = 0.0;
  std::int64_t checked = 0, kinks = 0;
  for (const auto& c : cases) {
    volsr::test::GradCheckOptions o;
    o.every = c.every;
    o.floor = c.floor;
    o.piecewise_linear = c.piecewise_linear;
    const auto r = volsr::test::grad_check(c.f, c.leaves, o);
    checked += r.checked;
    kinks += r.kinks;
    worst = std::max(worst, r.max_rel_error);
    v.require(r.checked > 0, c.name + ": nothing checked");
    v.require(r.max_rel_error < 1e-4, c.name + " " + r.worst);
  }
  const double t = seconds_since(t0);
  v.require(t < 300.0, "runtime < 5 min");
  v.detail << cases.size() << " graphs, " << checked << " coordinates (" << kinks << " kink stencils), max rel err "
           << worst;
}

// ---------------------------------------------------------------------------
// 3. Architecture contracts

void architecture(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  models::GeneratorConfig cfg;  // nf 16, B 4
  const auto gp = models::init_generator(cfg, 1);
  {
    nn::NoGradGuard guard;
    for (std::int64_t n : {24, 8}) {
      const Tensor y = models::generator_forward(random_tensor({1, 1, n, n, n}, 2, 0, 1, false), gp, cfg);
      v.require(y.shape() == Shape{1, 1, 4 * n, 4 * n, 4 * n}, "generator " + std::to_string(n) + "^3");
    }
    const models::DiscriminatorConfig dcfg;
    const auto dp = models::init_discriminator(dcfg, 2);
    for (Shape s : {Shape{1, 1, 32, 32, 32}, Shape{1, 1, 16, 24, 8}}) {
      const Tensor y = models::discriminator_forward(random_tensor(s, 3, 0, 1, false), dp, dcfg);
      v.require(y.shape() == s, "discriminator output shape");
    }
  }
  nn::ParamStore zero = gp.clone();
  for (auto& [name, t] : zero.items())
    for (double& d : t.mutable_data()) d = 0.0;
  const Tensor x = random_tensor({1, cfg.nf, 5, 4, 6}, 4, -1, 1, false);
  const models::ParamView block(zero, "rrdb0.");
  v.require(volsr::test::max_abs_diff(models::rdb_forward(x, block.sub("rdb0"), cfg).data(), x.data()) == 0.0,
            "zero RDB identity");
  v.require(volsr::test::max_abs_diff(models::rrdb_forward(x, block, cfg).data(), x.data()) == 0.0,
            "zero RRDB identity");
  const double t = seconds_since(t0);
  v.require(t < 60.0, "runtime < 1 min");
  v.detail << "24^3->96^3, 8^3->32^3, critic shape-preserving, zero blocks exact";
}

// ---------------------------------------------------------------------------
// 4. Loss identities

void loss_identities(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto fx = models::FeatureExtractor2D::random(models::FeatureExtractorConfig::standard(), 3);
  const Tensor x = random_tensor({1, 1, 16, 16, 16}, 5, 0, 1, false);
  const double perc = losses::perceptual_2_5d(x, x, fx).item();
  v.require(perc == 0.0, "perceptual(x, x) == 0");
  const double total = losses::total_generator_loss(0.2, 0.3, 1.0, losses::LossWeights{1.0, 1.0, 0.01});
  v.require(std::fabs(total - 0.51) <= 1e-12, "weighted total 0.51");
  const Tensor z = Tensor::zeros({1, 1, 8, 8, 8});
  const double disc = losses::adversarial_losses(z, z).discriminator.item();
  v.require(std::fabs(disc - 2.0 * std::log(2.0)) <= 1e-9, "zero logits give 2 ln 2");
  v.require(seconds_since(t0) < 30.0, "runtime < 30 s");
  v.detail << "perc " << perc << ", total " << total << ", disc - 2ln2 = " << disc - 2.0 * std::log(2.0);
}

// ---------------------------------------------------------------------------
// 5. Metric oracles

void metric_oracles(Verdict& v) {
  double ssim_err = 0.0, psnr_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Volume a = random_volume({16, 16, 16}, 2 * seed);
    const Volume b = random_volume({16, 16, 16}, 2 * seed + 1);
    ssim_err = std::max(ssim_err, std::fabs(metrics::ssim3d(a, b, 1.0) - volsr::test::direct_ssim3d(a, b, 1.0)));
    psnr_err = std::max(psnr_err, std::fabs(metrics::psnr(a, b, 1.0) - volsr::test::direct_psnr(a, b, 1.0)));
  }
  v.require(ssim_err <= 1e-8, "ssim oracle");
  v.require(psnr_err <= 1e-9, "psnr oracle");
  const Volume a = random_volume({16, 16, 16}, 99);
  v.require(metrics::ssim3d(a, a, 1.0) == 1.0, "SSIM(x, x) == 1");
  v.detail << "ssim err " << ssim_err << ", psnr err " << psnr_err << " dB";
}

// ---------------------------------------------------------------------------
// 6. Desk-scale ordering experiment

void ordering(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Volume> train, held_out;
  for (int i = 0; i < 20; ++i) (i < 15 ? train : held_out).push_back(pipeline::make_phantom({}, 1000 + i));

  pipeline::TrainConfig cfg;
  cfg.steps = 2000;
  cfg.seed = 7;
  cfg.weights = losses::LossWeights{1.0, 1.0, 0.01};
  cfg.generator.nf = 16;
  cfg.generator.num_blocks = 4;
  cfg.discriminator.base_channels = 8;
  cfg.gen_optimizer.lr = 2e-4;
  cfg.disc_optimizer.lr = 2e-4;
  pipeline::PatchSpec patch;
  patch.hr_patch = 32;
  const auto result = pipeline::train(train, cfg, patch);

  pipeline::SlidingWindowSpec sw;
  sw.window = 64;
  double ssim_sr = 0, ssim_tri = 0, psnr_sr = 0, psnr_tri = 0;
  for (const Volume& hr : held_out) {
    const Volume lr = kspace_degrade(hr, 4);
    const Volume sr = pipeline::sliding_window_infer(lr, result.generator, cfg.generator, sw);
    const Volume tri = resample_trilinear(lr, uniform_factor(Ratio{4, 1}));
    const double range = metrics::default_data_range(hr);
    ssim_sr += metrics::ssim3d(sr, hr, range) / 5.0;
    ssim_tri += metrics::ssim3d(tri, hr, range) / 5.0;
    psnr_sr += metrics::psnr(sr, hr, range) / 5.0;
    psnr_tri += metrics::psnr(tri, hr, range) / 5.0;
  }
  v.require(ssim_sr - ssim_tri >= 0.02, "SSIM margin >= 0.02");
  v.require(psnr_sr - psnr_tri >= 0.5, "PSNR margin >= 0.5 dB");
  const double t = seconds_since(t0);
  v.require(t <= 7200.0, "runtime <= 2 h");
  v.detail.precision(4);
  v.detail << std::fixed << cfg.steps << " steps; SSIM sr " << ssim_sr << " vs trilinear " << ssim_tri
           << "; PSNR sr " << psnr_sr << " vs trilinear " << psnr_tri << " dB";
}

// ---------------------------------------------------------------------------
// 7. Determinism

void determinism(Verdict& v) {
  volsr::test::TempDir dir;
  std::ostringstream out, err;
  const auto cli = [&](std::vector<std::string> args) { return cli::run(args, out, err); };
  v.require(cli({"phantom", "--out-dir", (dir / "ph").string(), "--count", "3", "--size", "32"}) == 0, "phantoms");
  const auto train = [&](const std::string& name) {
    return cli({"--threads", "1", "train", "--manifest", (dir / "ph/manifest.json").string(), "--out-dir",
                (dir / name).string(), "--steps", "6", "--seed", "11", "--nf", "4", "--gc", "2", "--blocks", "1",
                "--disc-base", "2", "--hr-patch", "16", "--checkpoint-every", "3", "--log-every", "0"});
  };
  v.require(train("a") == 0 && train("b") == 0, "train exit code");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file() || e.path().filename() == "run_manifest.json") continue;
    const auto rel = std::filesystem::relative(e.path(), dir / "a");
    const auto twin = dir / "b" / rel;
    v.require(std::filesystem::exists(twin), rel.string() + " missing in second run");
    if (std::filesystem::exists(twin))
      v.require(volsr::test::read_bytes(e.path()) == volsr::test::read_bytes(twin), rel.string() + " differs");
    ++files;
  }
  v.require(files >= 4, "checkpoints and log written");
  v.detail << files << " files bitwise identical across two runs";
  if (!err.str().empty()) v.detail << "; stderr: " << err.str();
}

// ---------------------------------------------------------------------------
// 8. Sliding-window equivalence

void sliding_window(Verdict& v) {
  models::GeneratorConfig cfg;
  cfg.nf = 4;
  cfg.gc = 2;
  cfg.num_blocks = 1;
  const auto gp = models::init_generator(cfg, 5);

  const Volume single = random_volume({6, 6, 6}, 1);
  pipeline::SlidingWindowSpec one;
  one.window = 24;
  const double single_err = volsr::test::max_abs_diff(pipeline::sliding_window_infer(single, gp, cfg, one),
                                                      pipeline::generator_infer(single, gp, cfg));
  v.require(single_err == 0.0, "single tile equals direct forward");

  const Volume lr = random_volume({10, 9, 12}, 2);
  const auto predict = [&](const Volume& tile) { return pipeline::generator_infer(tile, gp, cfg); };
  double multi_err = 0.0, weight_min = INFINITY;
  std::int64_t tiles = 0;
  for (pipeline::BlendMode mode : {pipeline::BlendMode::Gaussian, pipeline::BlendMode::Constant}) {
    for (double overlap : {0.25, 0.5}) {
      pipeline::SlidingWindowSpec spec;
      spec.window = 24;
      spec.overlap = overlap;
      spec.blend = mode;
      const auto r = pipeline::sliding_window_infer_detailed(lr, gp, cfg, spec);
      const auto oracle = volsr::test::brute_force_tiling(lr, 24, 4, overlap, mode == pipeline::BlendMode::Gaussian,
                                                          predict);
      for (std::size_t i = 0; i < oracle.size(); ++i)
        multi_err = std::max(multi_err, std::fabs(static_cast<double>(r.volume.data()[i]) - oracle[i]));
      // Convexity: the blend weights covering each voxel are positive and
      // normalized by their sum, so every voxel is a convex combination.
      for (double w : r.weight_sum) weight_min = std::min(weight_min, w);
      tiles += r.tiles;
    }
  }
  v.require(multi_err <= 1e-6, "multi-tile vs brute force");
  v.require(weight_min > 0.0, "every voxel covered by positive weight");
  const auto g = pipeline::blend_profile(24, pipeline::BlendMode::Gaussian);
  v.require(std::all_of(g.begin(), g.end(), [](double w) { return w > 0.0 && w <= 1.0; }), "blend weights in (0, 1]");
  v.detail << "single-tile err " << single_err << ", " << tiles << " tiles, max err vs oracle " << multi_err
           << ", min weight sum " << weight_min;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"spectral correctness", spectral},   {"gradient integrity", gradients},
      {"architecture contracts", architecture}, {"loss identities", loss_identities},
      {"metric oracles", metric_oracles},   {"desk-scale ordering experiment", ordering},
      {"determinism", determinism},         {"sliding-window equivalence", sliding_window},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "[exception: " << e.what() << "]";
    }
    std::printf("%s %d %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                v.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
