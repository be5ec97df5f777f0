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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>

#include "slices.hpp"
#include "volsr/error.hpp"
#include "volsr/kernels/kernels.hpp"
#include "volsr/metrics.hpp"
#include "volsr/parallel.hpp"
#include "volsr/pipeline.hpp"
#include "volsr/spectral.hpp"
#include "volsr/version.hpp"

namespace volsr::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

void write_manifest(const fs::path& path, RunManifest m) {
  m.finished_at = utc_now();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write run manifest: " + path.string());
  out << nlohmann::json(m).dump(2) << '\n';
}

fs::path manifest_beside(const fs::path& file) { return fs::path(file.string() + ".run.json"); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

pipeline::BlendMode parse_blend(const std::string& s) {
  if (s == "gaussian") return pipeline::BlendMode::Gaussian;
  if (s == "constant") return pipeline::BlendMode::Constant;
  throw ConfigError("blend must be 'gaussian' or 'constant', got '" + s + "'");
}

// Shared state of one invocation.
struct Context {
  std::ostream& out;
  RunManifest manifest;
};

// ---------------------------------------------------------------------------

struct DegradeArgs {
  std::vector<std::string> in;
  std::string out;
  int scale = 4;
};

void cmd_degrade(Context& ctx, const DegradeArgs& a) {
  if (a.scale < 1) throw ConfigError("--scale must be >= 1");
  const bool many = a.in.size() > 1;
  if (many) fs::create_directories(a.out);
  ctx.manifest.config = {{"scale", a.scale}};
  for (const auto& in : a.in) {
    const Volume v = load_volume(in);
    Volume src = v;
    if (!admits_kspace_degrade(v.shape(), a.scale)) {
      const Shape3 padded = kspace_padded_shape(v.shape(), a.scale);
      src = v.pad_to(padded, 0.0f);
      ctx.manifest.notes.push_back(in + ": zero-padded " + to_string(v.shape()) + " -> " + to_string(padded) +
                                   " before degradation");
    }
    const Volume lr = kspace_degrade(src, a.scale);
    const fs::path out = many ? fs::path(a.out) / fs::path(in).filename() : fs::path(a.out);
    ensure_parent(out);
    save_volume(lr, out);
    ctx.manifest.inputs.push_back(in);
    ctx.manifest.outputs.push_back(out.string());
    ctx.out << "degraded " << in << " " << to_string(v.shape()) << " -> " << out.string() << " "
            << to_string(lr.shape()) << "\n";
  }
  write_manifest(many ? fs::path(a.out) / "run_manifest.json" : manifest_beside(a.out), ctx.manifest);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string out_dir;
  pipeline::TrainConfig cfg;
  pipeline::PatchSpec patch;
  std::string pair_source = "patch";
  std::string weighting = "foreground";
  std::string extractor;
  double lr = 1e-4;
  std::optional<double> lr_g, lr_d;
  std::int64_t log_every = 50;
};

void cmd_train(Context& ctx, TrainArgs a) {
  auto& cfg = a.cfg;
  cfg.gen_optimizer.lr = a.lr_g.value_or(a.lr);
  cfg.disc_optimizer.lr = a.lr_d.value_or(a.lr);
  cfg.disc_optimizer.beta1 = cfg.gen_optimizer.beta1;
  cfg.disc_optimizer.beta2 = cfg.gen_optimizer.beta2;
  if (a.pair_source != "patch" && a.pair_source != "volume") throw ConfigError("--pair-source must be patch or volume");
  cfg.pair_source = a.pair_source == "patch" ? pipeline::PairSource::Patch : pipeline::PairSource::Volume;
  if (a.weighting != "foreground" && a.weighting != "uniform") throw ConfigError("--weighting must be foreground or uniform");
  a.patch.weighting = a.weighting == "foreground" ? pipeline::Weighting::Foreground : pipeline::Weighting::Uniform;
  a.patch.scale = cfg.generator.upscale;
  if (!a.extractor.empty()) cfg.extractor_weights = a.extractor;
  const fs::path dir(a.out_dir);
  if (cfg.checkpoint_every > 0) cfg.checkpoint_dir = dir / "checkpoints";
  cfg.validate();

  const auto entries = pipeline::load_manifest(a.manifest);
  const auto dataset = pipeline::load_dataset(entries);
  fs::create_directories(dir);
  ctx.manifest.seed = cfg.seed;
  ctx.manifest.config = {{"train", cfg},
                         {"patch", {{"hr_patch", a.patch.hr_patch}, {"scale", a.patch.scale}, {"weighting", a.weighting}}}};
  ctx.manifest.inputs.push_back(a.manifest);
  for (const auto& e : entries) ctx.manifest.inputs.push_back(e.path.string());

  const fs::path log_path = dir / "train_log.csv";
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write " + log_path.string());
  losses::write_log_header(log);
  const auto result = pipeline::train(dataset, cfg, a.patch, [&](const losses::LossReport& r) {
    losses::write_log_row(log, r);
    if (a.log_every > 0 && (r.step % a.log_every == 0 || r.step == cfg.steps)) {
      log.flush();
      ctx.out << r.describe() << "\n" << std::flush;
    }
  });
  log.close();
  const fs::path gen = dir / "generator.ckpt";
  const fs::path disc = dir / "discriminator.ckpt";
  pipeline::save_generator(gen, result.generator, cfg.generator, cfg.steps);
  pipeline::save_discriminator(disc, result.discriminator, cfg.discriminator, cfg.steps);
  ctx.manifest.outputs = {gen.string(), disc.string(), log_path.string()};
  write_manifest(dir / "run_manifest.json", ctx.manifest);
  ctx.out << "wrote " << gen.string() << "\n";
}

// ---------------------------------------------------------------------------

struct InferArgs {
  std::string checkpoint;
  std::string in;
  std::string out;
  std::int64_t window = 96;
  double overlap = 0.25;
  std::string blend = "gaussian";
  std::vector<std::int64_t> crop;
};

void cmd_infer(Context& ctx, const InferArgs& a) {
  pipeline::SlidingWindowSpec spec;
  spec.window = a.window;
  spec.overlap = a.overlap;
  spec.blend = parse_blend(a.blend);
  if (!a.crop.empty() && a.crop.size() != 3) throw ConfigError("--crop takes D H W");
  const auto ck = pipeline::load_generator(a.checkpoint);
  spec.validate(ck.config.upscale);
  const Volume lr = load_volume(a.in);
  Volume sr = pipeline::sliding_window_infer(lr, ck.params, ck.config, spec);
  if (!a.crop.empty()) {
    const Shape3 target{a.crop[0], a.crop[1], a.crop[2]};
    if (target.d < 1 || target.h < 1 || target.w < 1 || target.d > sr.shape().d || target.h > sr.shape().h ||
        target.w > sr.shape().w) {
      throw ConfigError("--crop " + to_string(target) + " must lie within the SR shape " + to_string(sr.shape()));
    }
    sr = sr.crop({0, 0, 0}, target);
  }
  ensure_parent(a.out);
  save_volume(sr, a.out);
  ctx.manifest.config = {{"window", spec.window}, {"overlap", spec.overlap}, {"blend", a.blend},
                         {"generator", ck.config}};
  if (!a.crop.empty()) ctx.manifest.config["crop"] = a.crop;
  ctx.manifest.inputs = {a.checkpoint, a.in};
  ctx.manifest.outputs = {a.out};
  write_manifest(manifest_beside(a.out), ctx.manifest);
  ctx.out << "inferred " << a.in << " " << to_string(lr.shape()) << " -> " << a.out << " " << to_string(sr.shape())
          << "\n";
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> hr, sr, lr, ids;
  std::string out;
  bool baseline = false;
  std::optional<double> data_range;
  std::string extractor;
  bool features = false;
  std::uint64_t feature_seed = 0;
};

Volume fit_to(const Volume& v, Shape3 target) {
  if (v.shape() == target) return v;
  return v.pad_to(target, 0.0f);
}

void cmd_evaluate(Context& ctx, const EvaluateArgs& a) {
  if (a.hr.size() != a.sr.size()) throw ConfigError("--hr and --sr need the same number of files");
  if (a.baseline && a.lr.size() != a.hr.size()) throw ConfigError("--baseline needs one --lr file per --hr file");
  if (!a.ids.empty() && a.ids.size() != a.hr.size()) throw ConfigError("--id needs one name per --hr file");
  std::optional<models::FeatureExtractor2D> fx;
  if (!a.extractor.empty()) {
    fx = models::FeatureExtractor2D::load(a.extractor);
  } else if (a.features) {
    fx = models::FeatureExtractor2D::random(models::FeatureExtractorConfig::standard(), a.feature_seed);
  }
  ensure_parent(a.out);
  std::ofstream csv(a.out);
  if (!csv) throw IoError("cannot write " + a.out);
  metrics::write_report_header(csv);
  for (std::size_t i = 0; i < a.hr.size(); ++i) {
    const Volume hr = load_volume(a.hr[i]);
    const Volume sr = load_volume(a.sr[i]);
    const std::string id = a.ids.empty() ? fs::path(a.hr[i]).stem().string() : a.ids[i];
    const double range = a.data_range.value_or(metrics::default_data_range(hr));
    const auto rep = metrics::evaluate(sr, hr, range, fx ? &*fx : nullptr);
    metrics::write_report_row(csv, id, "sr", rep);
    ctx.out << id << " sr ssim=" << rep.ssim << " psnr=" << rep.psnr << "\n";
    ctx.manifest.inputs.push_back(a.hr[i]);
    ctx.manifest.inputs.push_back(a.sr[i]);
    if (a.baseline) {
      const Volume lr = load_volume(a.lr[i]);
      const Shape3 ls = lr.shape(), hs = hr.shape();
      const std::int64_t f = (hs.d + ls.d - 1) / ls.d;
      if (f < 1 || ls.d * f < hs.d || ls.h * f < hs.h || ls.w * f < hs.w || (ls.d - 1) * f >= hs.d) {
        throw ShapeError("baseline: LR " + to_string(ls) + " is not an integer-factor reduction of HR " + to_string(hs));
      }
      Volume tri = resample_trilinear(lr, uniform_factor(Ratio{f, 1}));
      tri = fit_to(tri, hs);
      const auto base = metrics::evaluate(tri, hr, range, fx ? &*fx : nullptr);
      metrics::write_report_row(csv, id, "trilinear", base);
      ctx.out << id << " trilinear ssim=" << base.ssim << " psnr=" << base.psnr << "\n";
      ctx.manifest.inputs.push_back(a.lr[i]);
    }
  }
  if (fx) {
    ctx.out << "note: " << metrics::MetricsReport::kFeatureDistanceLabel << "\n";
    ctx.manifest.notes.push_back(metrics::MetricsReport::kFeatureDistanceLabel);
  }
  ctx.manifest.config = {{"baseline", a.baseline}, {"features", fx.has_value()}};
  if (a.data_range) ctx.manifest.config["data_range"] = *a.data_range;
  ctx.manifest.outputs = {a.out};
  write_manifest(manifest_beside(a.out), ctx.manifest);
}

// ---------------------------------------------------------------------------

struct SlicesArgs {
  std::string in;
  std::string out_dir;
  std::vector<std::int64_t> index;
  std::vector<double> clip;
  std::vector<std::int64_t> zoom;
  int zoom_factor = 4;
};

void cmd_slices(Context& ctx, const SlicesArgs& a) {
  if (!a.index.empty() && a.index.size() != 3) throw ConfigError("--index takes Z Y X");
  if (!a.clip.empty() && (a.clip.size() != 2 || !(a.clip[1] > a.clip[0]))) throw ConfigError("--clip takes LO HI with LO < HI");
  if (!a.zoom.empty() && a.zoom.size() != 4) throw ConfigError("--zoom takes Z Y X EXTENT");
  const Volume v = load_volume(a.in);
  const Shape3 s = v.shape();
  const double lo = a.clip.empty() ? v.min_value() : a.clip[0];
  const double hi = a.clip.empty() ? v.max_value() : a.clip[1];
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  std::array<std::int64_t, 3> idx{s.d / 2, s.h / 2, s.w / 2};
  if (!a.index.empty()) idx = {a.index[0], a.index[1], a.index[2]};

  auto emit = [&](const SliceImage& img, const fs::path& path) {
    write_gray_png(path, img.rows, img.cols, to_gray8(img.values, lo, hi));
    ctx.manifest.outputs.push_back(path.string());
    ctx.out << "wrote " << path.string() << " (" << img.cols << "x" << img.rows << ")\n";
  };
  for (Axis ax : kAllAxes) {
    emit(extract_slice(v, ax, idx[static_cast<std::size_t>(array_axis(ax))]), dir / (std::string(axis_name(ax)) + ".png"));
  }
  if (!a.zoom.empty()) {
    const std::int64_t e = a.zoom[3];
    if (e < 1 || e > std::min({s.d, s.h, s.w})) throw ConfigError("--zoom extent must fit inside the volume");
    const std::array<std::int64_t, 3> c{a.zoom[0], a.zoom[1], a.zoom[2]};
    std::array<std::int64_t, 3> corner{};
    for (int ax = 0; ax < 3; ++ax) {
      if (c[static_cast<std::size_t>(ax)] < 0 || c[static_cast<std::size_t>(ax)] >= s[ax]) {
        throw ConfigError("--zoom center lies outside the volume");
      }
      corner[static_cast<std::size_t>(ax)] = std::clamp<std::int64_t>(c[static_cast<std::size_t>(ax)] - e / 2, 0, s[ax] - e);
    }
    const Volume crop = v.crop(corner, {e, e, e});
    for (Axis ax : kAllAxes) {
      const auto k = static_cast<std::size_t>(array_axis(ax));
      emit(enlarge(extract_slice(crop, ax, c[k] - corner[k]), a.zoom_factor),
           dir / ("zoom_" + std::string(axis_name(ax)) + ".png"));
    }
  }
  ctx.manifest.config = {{"index", idx}, {"display_range", {lo, hi}}};
  if (!a.clip.empty()) ctx.manifest.config["clip"] = a.clip;
  if (!a.zoom.empty()) ctx.manifest.config["zoom"] = {{"center_extent", a.zoom}, {"factor", a.zoom_factor}};
  ctx.manifest.inputs = {a.in};
  write_manifest(dir / "run_manifest.json", ctx.manifest);
}

// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string manifest;
  std::string out_dir;
  int k = 5;
  std::uint64_t seed = 0;
};

void cmd_split(Context& ctx, const SplitArgs& a) {
  auto entries = pipeline::load_manifest(a.manifest);
  for (auto& e : entries) e.path = fs::absolute(e.path);
  const auto folds = pipeline::kfold_split(entries, a.k, a.seed);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const fs::path tr = dir / ("fold" + std::to_string(f) + "_train.json");
    const fs::path te = dir / ("fold" + std::to_string(f) + "_test.json");
    pipeline::save_manifest(tr, folds[f].train);
    pipeline::save_manifest(te, folds[f].test);
    ctx.manifest.outputs.push_back(tr.string());
    ctx.manifest.outputs.push_back(te.string());
    ctx.out << "fold " << f << ": " << folds[f].train.size() << " train, " << folds[f].test.size() << " test\n";
  }
  ctx.manifest.seed = a.seed;
  ctx.manifest.config = {{"k", a.k}};
  ctx.manifest.inputs = {a.manifest};
  write_manifest(dir / "run_manifest.json", ctx.manifest);
}

// ---------------------------------------------------------------------------

struct PhantomArgs {
  std::string out_dir;
  int count = 20;
  std::int64_t size = 64;
  std::uint64_t seed = 0;
};

void cmd_phantom(Context& ctx, const PhantomArgs& a) {
  if (a.count < 1 || a.size < 1) throw ConfigError("--count and --size must be >= 1");
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  pipeline::PhantomSpec spec;
  spec.shape = {a.size, a.size, a.size};
  std::vector<pipeline::DatasetEntry> entries;
  for (int i = 0; i < a.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "phantom_%03d.vbin", i);
    save_volume(pipeline::make_phantom(spec, a.seed + static_cast<std::uint64_t>(i)), dir / name);
    entries.push_back({name, std::nullopt});
    ctx.manifest.outputs.push_back((dir / name).string());
  }
  pipeline::save_manifest(dir / "manifest.json", entries);
  ctx.manifest.outputs.push_back((dir / "manifest.json").string());
  ctx.manifest.seed = a.seed;
  ctx.manifest.config = {{"count", a.count}, {"size", a.size}};
  write_manifest(dir / "run_manifest.json", ctx.manifest);
  ctx.out << "wrote " << a.count << " phantoms to " << dir.string() << "\n";
}

// ---------------------------------------------------------------------------

int report(std::ostream& err, const char* category, const char* kind, const std::string& msg) {
  err << "volsr:error:" << category << ":" << kind << ": " << one_line(msg) << "\n";
  const std::string c(category);
  return c == "usage" ? kUsage : c == "numeric" ? kNumeric : kData;
}

}  // namespace

void to_json(nlohmann::json& j, const RunManifest& m) {
  j = {{"tool", "volsr"},          {"version", kVersion},      {"command", m.command},
       {"argv", m.argv},           {"config", m.config},       {"seed", m.seed},
       {"inputs", m.inputs},       {"outputs", m.outputs},     {"notes", m.notes},
       {"threads", m.threads},     {"isa", m.isa},             {"started_at", m.started_at},
       {"finished_at", m.finished_at}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.config = j.value("config", nlohmann::json::object());
  m.seed = j.value("seed", std::uint64_t{0});
  m.inputs = j.value("inputs", std::vector<std::string>{});
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.notes = j.value("notes", std::vector<std::string>{});
  m.threads = j.value("threads", 1);
  m.isa = j.value("isa", std::string{});
  m.started_at = j.value("started_at", std::string{});
  m.finished_at = j.value("finished_at", std::string{});
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"volsr: volumetric 4x super-resolution toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads (VOLSR_THREADS overrides)")->check(CLI::PositiveNumber);

  DegradeArgs deg;
  auto* c_deg = app.add_subcommand("degrade", "k-space degradation of VBIN volumes");
  c_deg->add_option("--in", deg.in, "Input VBIN file(s)")->required()->check(CLI::ExistingFile);
  c_deg->add_option("--out", deg.out, "Output file, or directory when several inputs")->required();
  c_deg->add_option("--scale", deg.scale, "Per-axis reduction factor")->capture_default_str();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Alternating GAN training from a dataset manifest");
  c_tr->add_option("--manifest", tr.manifest, "Dataset manifest (JSON)")->required();
  c_tr->add_option("--out-dir", tr.out_dir, "Output directory")->required();
  c_tr->add_option("--steps", tr.cfg.steps)->capture_default_str();
  c_tr->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  c_tr->add_option("--seed", tr.cfg.seed)->capture_default_str();
  c_tr->add_option("--lr", tr.lr, "Adam learning rate for both networks")->capture_default_str();
  c_tr->add_option("--lr-g", tr.lr_g, "Generator learning rate");
  c_tr->add_option("--lr-d", tr.lr_d, "Discriminator learning rate");
  c_tr->add_option("--beta1", tr.cfg.gen_optimizer.beta1)->capture_default_str();
  c_tr->add_option("--beta2", tr.cfg.gen_optimizer.beta2)->capture_default_str();
  c_tr->add_option("--lambda-pixel", tr.cfg.weights.pixel)->capture_default_str();
  c_tr->add_option("--lambda-perc", tr.cfg.weights.perceptual)->capture_default_str();
  c_tr->add_option("--lambda-adv", tr.cfg.weights.adversarial)->capture_default_str();
  c_tr->add_option("--nf", tr.cfg.generator.nf)->capture_default_str();
  c_tr->add_option("--gc", tr.cfg.generator.gc)->capture_default_str();
  c_tr->add_option("--blocks", tr.cfg.generator.num_blocks)->capture_default_str();
  c_tr->add_option("--residual-scale", tr.cfg.generator.residual_scale)->capture_default_str();
  c_tr->add_option("--disc-base", tr.cfg.discriminator.base_channels)->capture_default_str();
  c_tr->add_option("--disc-depth", tr.cfg.discriminator.depth)->capture_default_str();
  c_tr->add_option("--hr-patch", tr.patch.hr_patch)->capture_default_str();
  c_tr->add_option("--weighting", tr.weighting, "foreground | uniform")->capture_default_str();
  c_tr->add_option("--pair-source", tr.pair_source, "patch | volume")->capture_default_str();
  c_tr->add_option("--slice-stride", tr.cfg.perceptual_slice_stride)->capture_default_str();
  c_tr->add_option("--extractor", tr.extractor, "Feature extractor weights (checkpoint)");
  c_tr->add_option("--checkpoint-every", tr.cfg.checkpoint_every)->capture_default_str();
  c_tr->add_option("--log-every", tr.log_every, "Progress line cadence (0: silent)")->capture_default_str();

  InferArgs inf;
  auto* c_inf = app.add_subcommand("infer", "Sliding-window super-resolution of an LR volume");
  c_inf->add_option("--checkpoint", inf.checkpoint)->required()->check(CLI::ExistingFile);
  c_inf->add_option("--in", inf.in)->required()->check(CLI::ExistingFile);
  c_inf->add_option("--out", inf.out)->required();
  c_inf->add_option("--window", inf.window, "HR-space tile edge")->capture_default_str();
  c_inf->add_option("--overlap", inf.overlap)->capture_default_str();
  c_inf->add_option("--blend", inf.blend, "gaussian | constant")->capture_default_str();
  c_inf->add_option("--crop", inf.crop, "Crop the SR output to D H W")->expected(3);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "SSIM / PSNR report against HR references");
  c_ev->add_option("--hr", ev.hr)->required();
  c_ev->add_option("--sr", ev.sr)->required();
  c_ev->add_option("--lr", ev.lr, "LR inputs for the trilinear baseline");
  c_ev->add_option("--id", ev.ids, "Row labels");
  c_ev->add_option("--out", ev.out, "CSV report")->required();
  c_ev->add_flag("--baseline", ev.baseline, "Add a trilinear row per volume");
  c_ev->add_option("--data-range", ev.data_range, "Override max-min of the HR volume");
  c_ev->add_option("--extractor", ev.extractor, "Feature extractor weights for feature_distance");
  c_ev->add_flag("--features", ev.features, "feature_distance with seeded random extractor weights");
  c_ev->add_option("--feature-seed", ev.feature_seed)->capture_default_str();

  SlicesArgs sl;
  auto* c_sl = app.add_subcommand("slices", "Axial / coronal / sagittal PNG export");
  c_sl->add_option("--in", sl.in)->required()->check(CLI::ExistingFile);
  c_sl->add_option("--out-dir", sl.out_dir)->required();
  c_sl->add_option("--index", sl.index, "Slice indices Z Y X (default: center)")->expected(3);
  c_sl->add_option("--clip", sl.clip, "Display window LO HI")->expected(2);
  c_sl->add_option("--zoom", sl.zoom, "Zoomed crop centered at Z Y X with edge EXTENT")->expected(4);
  c_sl->add_option("--zoom-factor", sl.zoom_factor)->capture_default_str();

  SplitArgs sp;
  auto* c_sp = app.add_subcommand("split", "k-fold manifest splitter");
  c_sp->add_option("--manifest", sp.manifest)->required();
  c_sp->add_option("--out-dir", sp.out_dir)->required();
  c_sp->add_option("--k", sp.k)->capture_default_str();
  c_sp->add_option("--seed", sp.seed)->capture_default_str();

  PhantomArgs ph;
  auto* c_ph = app.add_subcommand("phantom", "Synthetic phantom volumes plus a manifest");
  c_ph->add_option("--out-dir", ph.out_dir)->required();
  c_ph->add_option("--count", ph.count)->capture_default_str();
  c_ph->add_option("--size", ph.size)->capture_default_str();
  c_ph->add_option("--seed", ph.seed)->capture_default_str();

  std::string replay_path;
  auto* c_rp = app.add_subcommand("replay", "Re-run a recorded command single-threaded");
  c_rp->add_option("--manifest", replay_path)->required()->check(CLI::ExistingFile);

  std::vector<const char*> argv{"volsr"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests surface as CallForHelp raised inside the sub.
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    return report(err, "usage", "parse", e.what());
  }

  try {
    if (const char* env = std::getenv("VOLSR_THREADS"); env != nullptr && *env != '\0') {
      char* end = nullptr;
      const long n = std::strtol(env, &end, 10);
      if (*end != '\0' || n < 1 || n > 4096) throw ConfigError(std::string("VOLSR_THREADS must be a positive integer, got '") + env + "'");
      threads = static_cast<int>(n);
    }
    set_num_threads(threads);

    const CLI::App* sub = app.get_subcommands().front();
    Context ctx{out, {}};
    ctx.manifest.command = sub->get_name();
    const auto pos = std::find(args.begin(), args.end(), sub->get_name());
    if (pos != args.end()) ctx.manifest.argv.assign(pos + 1, args.end());
    ctx.manifest.threads = threads;
    ctx.manifest.isa = std::string(kernels::active().name);
    ctx.manifest.started_at = utc_now();

    if (sub == c_deg) cmd_degrade(ctx, deg);
    else if (sub == c_tr) cmd_train(ctx, tr);
    else if (sub == c_inf) cmd_infer(ctx, inf);
    else if (sub == c_ev) cmd_evaluate(ctx, ev);
    else if (sub == c_sl) cmd_slices(ctx, sl);
    else if (sub == c_sp) cmd_split(ctx, sp);
    else if (sub == c_ph) cmd_phantom(ctx, ph);
    else if (sub == c_rp) {
      std::ifstream in(replay_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw MalformedHeaderError("malformed run manifest " + replay_path + ": " + e.what());
      }
      RunManifest m;
      try {
        m = j.get<RunManifest>();
      } catch (const nlohmann::json::exception& e) {
        throw MalformedHeaderError("malformed run manifest " + replay_path + ": " + e.what());
      }
      if (m.command == "replay") throw ConfigError("refusing to replay a replay");
      std::vector<std::string> again{"--threads", "1", m.command};
      again.insert(again.end(), m.argv.begin(), m.argv.end());
      out << "replaying: volsr";
      for (const auto& s : again) out << ' ' << s;
      out << "\n";
      return run(again, out, err);
    }
    return kOk;
  } catch (const Error& e) {
    return report(err, e.category(), e.kind(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return report(err, "data", "json", e.what());
  } catch (const fs::filesystem_error& e) {
    return report(err, "data", "io", e.what());
  } catch (const std::bad_alloc&) {
    return report(err, "data", "memory", "out of memory");
  }
}

}  // namespace volsr::cli
