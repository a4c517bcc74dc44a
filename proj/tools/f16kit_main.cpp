// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// f16kit: generate synthetic clips, build window aligners, run forward and
// reduced-frame-rate decodes, train/evaluate the desk-scale classifier, and
// emit analysis reports. Exit codes: 0 success, 2 usage/config error,
// 1 runtime error (including failed verification).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "f16/aligner.hpp"
#include "f16/analysis.hpp"
#include "f16/decoding.hpp"
#include "f16/errors.hpp"
#include "f16/features.hpp"
#include "f16/gradcheck.hpp"
#include "f16/io.hpp"
#include "f16/trainer.hpp"

namespace {

using namespace f16;

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out.flush()) throw IoError("write failed: " + path);
}

/// Token archives: tokens/meta = [count, m, h], then tokens/<j> per window.
void write_tokens(const std::string& path, const std::vector<VisualTokens<float>>& tokens) {
  if (tokens.empty()) throw FormatError("refusing to write an empty token list");
  Archive archive;
  const std::size_t m = tokens.front().tokens.dim(0);
  const std::size_t h = tokens.front().tokens.dim(1);
  archive.add("tokens/meta",
              Tensor32({3}, {static_cast<float>(tokens.size()),
                             static_cast<float>(m), static_cast<float>(h)}));
  for (const auto& t : tokens) {
    archive.add("tokens/" + std::to_string(t.window_index), t.tokens);
  }
  archive.save(path);
}

std::vector<FrameFeatures<float>> subsample(const std::vector<FrameFeatures<float>>& seq,
                                            int native_fps, int target_fps) {
  const auto indices =
      sample_frame_indices(seq.size(), native_fps, target_fps, kFrameCap);
  std::vector<FrameFeatures<float>> out;
  out.reserve(indices.size());
  for (const std::size_t idx : indices) out.push_back(seq[idx]);
  return out;
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  std::uint64_t seed = 1;
  double rps = 0.75;
  std::string dir = "ccw";
  double dur = 2.0;
  int fps = 16;
  int side = 32;
  int patch_grid = 4;
  int d = 24;
  std::string out;
};

void run_gen(const GenOpts& o) {
  const int direction = o.dir == "cw" ? -1 : 1;
  const RawVideo video =
      generate_rotating_dot(o.seed, o.rps, direction, o.dur, o.fps, o.side);
  if (o.side % o.patch_grid != 0) {
    throw ConfigError("side " + std::to_string(o.side) +
                      " is not a multiple of patch grid " +
                      std::to_string(o.patch_grid));
  }
  const int patch_side = o.side / o.patch_grid;
  const EncoderStub<float> encoder(o.patch_grid, patch_side * patch_side, o.d,
                                   o.seed);
  const auto indices =
      sample_frame_indices(video.frames.size(), o.fps, o.fps, kFrameCap);
  const auto features = encoder.encode(video, indices);
  write_features(o.out, features);
  std::cout << "wrote " << features.size() << " frame features (p="
            << encoder.patches() << ", d=" << o.d << ") to " << o.out << "\n";
}

// ---------------------------------------------------------------------------
// init

struct InitOpts {
  std::uint64_t seed = 1;
  std::size_t w = 16;
  double noise = 1.0;
  int d = 24;
  int h = 32;
  std::size_t p = 16;
  std::string pooling = "post";
  std::string base;
  std::string out;
};

void run_init(const InitOpts& o) {
  SingleFrameAlignerParams<float> base =
      o.base.empty()
          ? random_single_frame_params<float>(static_cast<std::size_t>(o.d),
                                              static_cast<std::size_t>(o.h), o.seed)
          : load_single_frame(Archive::load(o.base));
  const Pooling pooling = o.pooling == "pre" ? Pooling::kPre : Pooling::kPost;
  const HfrAlignerParams<float> params =
      init_from_single_frame(base, o.w, o.noise, o.seed, pooling);
  Archive archive;
  save_single_frame(archive, base);
  save_aligner(archive, params, o.p);
  archive.save(o.out);
  std::cout << "wrote aligner (w=" << o.w << ", d=" << base.d() << ", h="
            << base.h() << ", p=" << o.p << ", pooling=" << o.pooling << ") to "
            << o.out << "\n";
}

// ---------------------------------------------------------------------------
// forward / decode

struct ForwardOpts {
  std::string in;
  std::string weights;
  std::string out;
  unsigned threads = 1;
};

void check_feature_shape(const std::vector<FrameFeatures<float>>& seq,
                         const HfrAlignerParams<float>& params, std::size_t patches) {
  if (seq.front().z.dim(0) != patches || seq.front().z.dim(1) != params.d()) {
    throw ShapeError("features are " + dims_to_string(seq.front().z.dims()) +
                     " but the aligner expects " + std::to_string(patches) + "x" +
                     std::to_string(params.d()));
  }
}

void run_forward(const ForwardOpts& o) {
  const auto seq = read_features(o.in);
  std::size_t patches = 0;
  const HfrAlignerParams<float> params =
      load_aligner(Archive::load(o.weights), &patches);
  check_feature_shape(seq, params, patches);
  const auto tokens = video_forward(seq, params, o.threads);
  write_tokens(o.out, tokens);
  std::cout << "wrote " << tokens.size() << " windows x "
            << tokens.front().tokens.dim(0) << " tokens to " << o.out << "\n";
}

struct DecodeOpts {
  std::string in;
  std::string weights;
  std::string out;
  std::string method = "repeat";
  int test_fps = 16;
};

void run_decode(const DecodeOpts& o) {
  const auto seq = read_features(o.in);
  std::size_t patches = 0;
  const HfrAlignerParams<float> params =
      load_aligner(Archive::load(o.weights), &patches);
  check_feature_shape(seq, params, patches);

  // The input file carries features at the aligner's native rate (window = 1 s
  // of video); reduced-rate decoding first re-samples it down to test fps.
  DecodeConfig cfg;
  cfg.train_fps = static_cast<int>(params.window);
  cfg.test_fps = o.test_fps;
  cfg.method = o.method == "trim" ? DecodeMethod::kTrim : DecodeMethod::kRepeat;
  const int k = cfg.k();
  const auto reduced = subsample(seq, cfg.train_fps, cfg.test_fps);

  std::vector<VisualTokens<float>> tokens;
  if (cfg.method == DecodeMethod::kRepeat) {
    tokens = decode_repeat(reduced, params, cfg);
  } else {
    tokens = decode_trimmed(reduced,
                            trim_aligner(params, params.window /
                                                     static_cast<std::size_t>(k)));
  }
  write_tokens(o.out, tokens);
  std::cout << "decoded " << tokens.size() << " windows (method=" << o.method
            << ", test fps " << o.test_fps << ") to " << o.out << "\n";
}

// ---------------------------------------------------------------------------
// train / eval

struct TrainOpts {
  std::uint64_t seed = 1;
  int fps = 16;
  int epochs = 30;
  double lr = 1e-2;
  int batch = 4;
  std::size_t n_train = 240;
  std::size_t n_test = 60;
  std::vector<double> speeds = {0.75};
  double dur = 2.0;
  int side = 32;
  int patch_grid = 4;
  int d = 24;
  int h = 32;
  double noise = 1.0;
  std::string pooling = "post";
  std::string report_path;
  std::string checkpoint;
};

void run_train(const TrainOpts& o) {
  ToyModelConfig mc;
  mc.fps = o.fps;
  mc.side = o.side;
  mc.patch_grid = o.patch_grid;
  mc.d = o.d;
  mc.h = o.h;
  mc.noise_scale = o.noise;
  mc.pooling = o.pooling == "pre" ? Pooling::kPre : Pooling::kPost;
  mc.seed = o.seed;
  ToyModel<float> model = make_toy_model<float>(mc);

  MotionDatasetConfig dc;
  dc.seed = o.seed;
  dc.n_train = o.n_train;
  dc.n_test = o.n_test;
  dc.speeds = o.speeds;
  dc.duration_s = o.dur;
  dc.native_fps = 16;
  dc.side = o.side;
  const MotionDataset dataset = make_motion_dataset(dc);

  TrainConfig tc;
  tc.learning_rate = o.lr;
  tc.epochs = o.epochs;
  tc.batch = o.batch;
  tc.seed = o.seed;
  tc.fps = o.fps;
  const TrainReport report = train(model, dataset, tc);

  std::cout << report.to_text();
  if (!o.report_path.empty()) write_text_file(o.report_path, report.to_text());
  if (!o.checkpoint.empty()) {
    Archive archive;
    save_model(archive, model);
    archive.save(o.checkpoint);
  }
}

struct EvalOpts {
  std::string checkpoint;
  std::uint64_t seed = 1;
  std::size_t n_test = 60;
  std::vector<double> speeds = {0.75};
  double dur = 2.0;
  int side = 32;
};

void run_eval(const EvalOpts& o) {
  const ToyModel<float> model = load_model(Archive::load(o.checkpoint));
  MotionDatasetConfig dc;
  dc.seed = o.seed;
  dc.n_train = 0;
  dc.n_test = o.n_test;
  dc.speeds = o.speeds;
  dc.duration_s = o.dur;
  dc.native_fps = 16;
  dc.side = o.side;
  const MotionDataset dataset = make_motion_dataset(dc);
  const double accuracy = evaluate(model, dataset.test, model.fps);
  std::printf("test_accuracy %.6f\n", accuracy);
}

// ---------------------------------------------------------------------------
// analyze

struct CosineOpts {
  std::string in;
  std::size_t ref = 0;
  bool csv = false;
};

void run_cosine(const CosineOpts& o) {
  const auto seq = read_features(o.in);
  const CosineReport report = cosine_report(seq, o.ref);
  std::cout << (o.csv ? report.to_csv() : report.to_text());
}

struct BudgetOpts {
  std::size_t frames = 0;
  std::size_t w = 16;
  std::size_t p = 729;
};

void run_budget(const BudgetOpts& o) {
  const TokenBudget budget = token_budget(o.frames, o.w, o.p);
  std::cout << budget.windows << " " << budget.tokens_per_window << " "
            << budget.total_tokens << "\n";
}

struct CostOpts {
  std::string preset = "desk";
  bool csv = false;
  CostConfig cfg;
  // Tracks which overrides were given on the command line.
  bool has_fps = false, has_dur = false, has_w = false, has_p = false,
       has_d = false, has_h = false, has_patch_dim = false, has_enc = false,
       has_out_tokens = false, has_alpha = false, has_beta = false,
       has_width = false;
  CostConfig overrides;
};

void run_cost(const CostOpts& o) {
  CostConfig cfg = o.preset == "7b" ? CostConfig::proxy_7b() : CostConfig{};
  if (o.has_fps) cfg.fps = o.overrides.fps;
  if (o.has_dur) cfg.duration_s = o.overrides.duration_s;
  if (o.has_w) cfg.w = o.overrides.w;
  if (o.has_p) cfg.p = o.overrides.p;
  if (o.has_d) cfg.d = o.overrides.d;
  if (o.has_h) cfg.h = o.overrides.h;
  if (o.has_patch_dim) cfg.patch_dim = o.overrides.patch_dim;
  if (o.has_enc) cfg.encoder_macs_per_frame = o.overrides.encoder_macs_per_frame;
  if (o.has_out_tokens) cfg.output_tokens = o.overrides.output_tokens;
  if (o.has_alpha) cfg.alpha = o.overrides.alpha;
  if (o.has_beta) cfg.beta = o.overrides.beta;
  if (o.has_width) cfg.width = o.overrides.width;
  const CostReport report = cost_model(cfg);
  std::cout << (o.csv ? report.to_csv() : report.to_text());
}

// ---------------------------------------------------------------------------
// verify-avg / verify-grad

struct VerifyAvgOpts {
  std::string weights;
  int windows = 128;
  std::uint64_t seed = 99;
  double tol = 1e-5;
  bool use_f64 = false;
};

/// Max abs difference between the aligner's pre-pool output and the mean of
/// the per-frame single-frame outputs, over seeded random windows. For the
/// pre-pooling variant the identity holds on per-frame pooled features.
template <std::floating_point T>
double averaging_gap(const HfrAlignerParams<T>& params,
                     const SingleFrameAlignerParams<T>& base, std::size_t patches,
                     int windows, std::uint64_t seed) {
  const std::size_t w = params.window, d = params.d(), h = params.h();
  double worst = 0.0;
  for (int j = 0; j < windows; ++j) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(j)));
    WindowBatch<T> win;
    win.window_index = static_cast<std::size_t>(j);
    for (std::size_t k = 0; k < w; ++k) {
      Tensor<T> z({patches, d});
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = static_cast<T>(rng.uniform(-1.0, 1.0));
      }
      win.frames.push_back({std::move(z), static_cast<int>(k), 0.0f});
    }
    const WindowTrace<T> trace = window_forward_trace(win, params);
    Tensor<T> mean({trace.pre_pool.dim(0), h});
    for (const auto& f : win.frames) {
      const Tensor<T> z = params.pooling == Pooling::kPre ? pool_rows(f.z) : f.z;
      add_inplace(mean, single_frame_forward(z, base));
    }
    scale_inplace(mean, T(1) / static_cast<T>(w));
    worst = std::max(worst, static_cast<double>(max_abs_diff(trace.pre_pool, mean)));
  }
  return worst;
}

int run_verify_avg(const VerifyAvgOpts& o) {
  const Archive archive = Archive::load(o.weights);
  std::size_t patches = 0;
  const HfrAlignerParams<float> params = load_aligner(archive, &patches);
  const SingleFrameAlignerParams<float> base = load_single_frame(archive);
  double gap = 0.0;
  if (o.use_f64) {
    const HfrAlignerParams<double> p64{params.w_p.cast<double>(),
                                       params.b_p.cast<double>(),
                                       params.w_q.cast<double>(),
                                       params.b_q.cast<double>(),
                                       params.window, params.pooling};
    const SingleFrameAlignerParams<double> b64{
        base.w_a.cast<double>(), base.b_a.cast<double>(), base.w_b.cast<double>(),
        base.b_b.cast<double>()};
    gap = averaging_gap(p64, b64, patches, o.windows, o.seed);
  } else {
    gap = averaging_gap(params, base, patches, o.windows, o.seed);
  }
  const bool pass = gap <= o.tol;
  std::printf("averaging gap %.3e over %d windows (tolerance %.1e): %s\n", gap,
              o.windows, o.tol, pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

struct VerifyGradOpts {
  int seeds = 100;
  std::uint64_t seed = 7;
  double tol = 1e-6;
};

int run_verify_grad(const VerifyGradOpts& o) {
  for (const auto& item : run_gradient_checks(o.seed)) {
    std::printf("%-14s max rel err %.3e\n", item.name.c_str(), item.max_rel_err);
  }
  const double worst = worst_gradient_error(o.seed, o.seeds);
  const bool pass = worst <= o.tol;
  std::printf("worst over %d seeds %.3e (tolerance %.1e): %s\n", o.seeds, worst,
              o.tol, pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"window-aligner toolkit: synthetic clips, block-initialized "
               "aligners, reduced-frame-rate decoding, and analysis reports"};
  app.require_subcommand(1);
  int verify_result = 0;

  auto gen_opts = std::make_shared<GenOpts>();
  auto* gen = app.add_subcommand("gen", "generate a rotating-dot clip and encode it");
  gen->add_option("--seed", gen_opts->seed, "RNG seed (phase and encoder)")
      ->capture_default_str();
  gen->add_option("--rps", gen_opts->rps, "rotation speed, revolutions per second")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  gen->add_option("--dir", gen_opts->dir, "rotation direction")
      ->check(CLI::IsMember({"cw", "ccw"}))
      ->capture_default_str();
  gen->add_option("--dur", gen_opts->dur, "clip duration, seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--fps", gen_opts->fps, "native frame rate")
      ->check(CLI::Range(16, 1000))
      ->capture_default_str();
  gen->add_option("--side", gen_opts->side, "frame side, pixels")
      ->check(CLI::Range(16, 4096))
      ->capture_default_str();
  gen->add_option("--patch-grid", gen_opts->patch_grid, "patches per side")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  gen->add_option("--d", gen_opts->d, "encoder feature width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--out", gen_opts->out, "output feature file")->required();
  gen->callback([gen_opts] { run_gen(*gen_opts); });

  auto init_opts = std::make_shared<InitOpts>();
  auto* init = app.add_subcommand(
      "init", "build a window aligner from single-frame weights");
  init->add_option("--seed", init_opts->seed, "RNG seed (base weights and noise)")
      ->capture_default_str();
  init->add_option("--w", init_opts->w, "window width, frames")
      ->check(CLI::Range(1, 1 << 16))
      ->capture_default_str();
  init->add_option("--noise", init_opts->noise, "off-diagonal noise scale")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  init->add_option("--d", init_opts->d, "input feature width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  init->add_option("--h-dim", init_opts->h, "token width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  init->add_option("--p", init_opts->p, "patches per frame (perfect square)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  init->add_option("--pooling", init_opts->pooling, "pool placement")
      ->check(CLI::IsMember({"post", "pre"}))
      ->capture_default_str();
  init->add_option("--base", init_opts->base,
                   "archive holding base/W_A.. records (default: seeded random)")
      ->check(CLI::ExistingFile);
  init->add_option("--out", init_opts->out, "output weight archive")->required();
  init->callback([init_opts] { run_init(*init_opts); });

  auto fwd_opts = std::make_shared<ForwardOpts>();
  auto* fwd = app.add_subcommand("forward", "full-rate forward pass over features");
  fwd->add_option("--in", fwd_opts->in, "input feature file")
      ->required()
      ->check(CLI::ExistingFile);
  fwd->add_option("--weights", fwd_opts->weights, "aligner weight archive")
      ->required()
      ->check(CLI::ExistingFile);
  fwd->add_option("--out", fwd_opts->out, "output token archive")->required();
  fwd->add_option("--threads", fwd_opts->threads, "window-parallel workers")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
  fwd->callback([fwd_opts] { run_forward(*fwd_opts); });

  auto dec_opts = std::make_shared<DecodeOpts>();
  auto* dec = app.add_subcommand("decode", "reduced-frame-rate decoding");
  dec->add_option("--in", dec_opts->in, "input feature file (at the train rate)")
      ->required()
      ->check(CLI::ExistingFile);
  dec->add_option("--weights", dec_opts->weights, "aligner weight archive")
      ->required()
      ->check(CLI::ExistingFile);
  dec->add_option("--out", dec_opts->out, "output token archive")->required();
  dec->add_option("--method", dec_opts->method, "decoding method")
      ->check(CLI::IsMember({"repeat", "trim"}))
      ->capture_default_str();
  dec->add_option("--test-fps", dec_opts->test_fps,
                  "reduced rate; must divide the train rate")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  dec->callback([dec_opts] { run_decode(*dec_opts); });

  auto train_opts = std::make_shared<TrainOpts>();
  auto* tr = app.add_subcommand(
      "train", "train the rotation-direction classifier (16 fps native data)");
  tr->add_option("--seed", train_opts->seed, "RNG seed (model, data, shuffling)")
      ->capture_default_str();
  tr->add_option("--fps", train_opts->fps, "sampling rate and window width")
      ->check(CLI::IsMember({1, 16}))
      ->capture_default_str();
  tr->add_option("--epochs", train_opts->epochs, "training epochs")
      ->check(CLI::Range(0, 100000))
      ->capture_default_str();
  tr->add_option("--lr", train_opts->lr, "SGD learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--batch", train_opts->batch, "minibatch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--n-train", train_opts->n_train, "training items")
      ->capture_default_str();
  tr->add_option("--n-test", train_opts->n_test, "test items")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--speeds", train_opts->speeds,
                 "rotation speeds, rev/s (some fractional part must be > 1/2)")
      ->delimiter(',')
      ->capture_default_str();
  tr->add_option("--dur", train_opts->dur, "clip duration, seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--side", train_opts->side, "frame side, pixels")
      ->check(CLI::Range(16, 4096))
      ->capture_default_str();
  tr->add_option("--patch-grid", train_opts->patch_grid, "patches per side")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  tr->add_option("--d", train_opts->d, "encoder feature width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--h-dim", train_opts->h, "token width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--noise", train_opts->noise, "aligner init noise scale")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  tr->add_option("--pooling", train_opts->pooling, "pool placement")
      ->check(CLI::IsMember({"post", "pre"}))
      ->capture_default_str();
  tr->add_option("--report", train_opts->report_path, "also write the report here");
  tr->add_option("--checkpoint", train_opts->checkpoint, "save trained weights here");
  tr->callback([train_opts] { run_train(*train_opts); });

  auto eval_opts = std::make_shared<EvalOpts>();
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a fresh test split");
  ev->add_option("--checkpoint", eval_opts->checkpoint, "model archive")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--seed", eval_opts->seed, "dataset seed")->capture_default_str();
  ev->add_option("--n-test", eval_opts->n_test, "test items")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ev->add_option("--speeds", eval_opts->speeds, "rotation speeds, rev/s")
      ->delimiter(',')
      ->capture_default_str();
  ev->add_option("--dur", eval_opts->dur, "clip duration, seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ev->add_option("--side", eval_opts->side, "frame side, pixels")
      ->check(CLI::Range(16, 4096))
      ->capture_default_str();
  ev->callback([eval_opts] { run_eval(*eval_opts); });

  auto* an = app.add_subcommand("analyze", "similarity, token, and cost reports");
  an->require_subcommand(1);

  auto cos_opts = std::make_shared<CosineOpts>();
  auto* cos = an->add_subcommand(
      "cosine", "per-frame cosine similarity to a reference, before/after pooling");
  cos->add_option("--in", cos_opts->in, "input feature file")
      ->required()
      ->check(CLI::ExistingFile);
  cos->add_option("--ref", cos_opts->ref, "reference frame position")
      ->capture_default_str();
  cos->add_flag("--csv", cos_opts->csv, "emit comma-separated values");
  cos->callback([cos_opts] { run_cosine(*cos_opts); });

  auto bud_opts = std::make_shared<BudgetOpts>();
  auto* bud = an->add_subcommand("budget",
                                 "windows / tokens-per-window / total tokens");
  bud->add_option("--frames", bud_opts->frames, "sampled frame count")
      ->required()
      ->check(CLI::PositiveNumber);
  bud->add_option("--w", bud_opts->w, "window width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bud->add_option("--p", bud_opts->p, "patches per frame (perfect square)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bud->callback([bud_opts] { run_budget(*bud_opts); });

  auto cost_opts = std::make_shared<CostOpts>();
  auto* cost = an->add_subcommand("cost", "analytical multiply-accumulate model");
  cost->add_option("--preset", cost_opts->preset,
                   "desk: stub dims; 7b: documented full-scale constants")
      ->check(CLI::IsMember({"desk", "7b"}))
      ->capture_default_str();
  cost->add_flag("--csv", cost_opts->csv, "emit comma-separated values");
  auto* cost_fps = cost->add_option("--fps", cost_opts->overrides.fps, "frame rate")
                       ->check(CLI::Range(1, 1000));
  auto* cost_dur = cost->add_option("--dur", cost_opts->overrides.duration_s,
                                    "clip duration, seconds")
                       ->check(CLI::PositiveNumber);
  auto* cost_w = cost->add_option("--w", cost_opts->overrides.w, "window width")
                     ->check(CLI::PositiveNumber);
  auto* cost_p = cost->add_option("--p", cost_opts->overrides.p, "patches per frame")
                     ->check(CLI::PositiveNumber);
  auto* cost_d = cost->add_option("--d", cost_opts->overrides.d, "encoder width")
                     ->check(CLI::PositiveNumber);
  auto* cost_h = cost->add_option("--h-dim", cost_opts->overrides.h, "token width")
                     ->check(CLI::PositiveNumber);
  auto* cost_pd = cost->add_option("--patch-dim", cost_opts->overrides.patch_dim,
                                   "pixels per patch (stub encoder formula)");
  auto* cost_enc =
      cost->add_option("--encoder-macs-per-frame",
                       cost_opts->overrides.encoder_macs_per_frame,
                       "override the per-frame encoder cost")
          ->check(CLI::NonNegativeNumber);
  auto* cost_ot = cost->add_option("--output-tokens",
                                   cost_opts->overrides.output_tokens,
                                   "generated token count");
  auto* cost_a = cost->add_option("--alpha", cost_opts->overrides.alpha,
                                  "attention term scale (2 x layers)")
                     ->check(CLI::NonNegativeNumber);
  auto* cost_b = cost->add_option("--beta", cost_opts->overrides.beta,
                                  "MLP term scale (12 x layers)")
                     ->check(CLI::NonNegativeNumber);
  auto* cost_wd = cost->add_option("--width", cost_opts->overrides.width,
                                   "downstream model width")
                      ->check(CLI::PositiveNumber);
  cost->callback([cost_opts, cost_fps, cost_dur, cost_w, cost_p, cost_d, cost_h,
                  cost_pd, cost_enc, cost_ot, cost_a, cost_b, cost_wd] {
    cost_opts->has_fps = cost_fps->count() > 0;
    cost_opts->has_dur = cost_dur->count() > 0;
    cost_opts->has_w = cost_w->count() > 0;
    cost_opts->has_p = cost_p->count() > 0;
    cost_opts->has_d = cost_d->count() > 0;
    cost_opts->has_h = cost_h->count() > 0;
    cost_opts->has_patch_dim = cost_pd->count() > 0;
    cost_opts->has_enc = cost_enc->count() > 0;
    cost_opts->has_out_tokens = cost_ot->count() > 0;
    cost_opts->has_alpha = cost_a->count() > 0;
    cost_opts->has_beta = cost_b->count() > 0;
    cost_opts->has_width = cost_wd->count() > 0;
    run_cost(*cost_opts);
  });

  auto avg_opts = std::make_shared<VerifyAvgOpts>();
  auto* vavg = app.add_subcommand(
      "verify-avg", "check the averaging-at-init identity on random windows");
  vavg->add_option("--weights", avg_opts->weights,
                   "archive holding both aligner/* and base/* records")
      ->required()
      ->check(CLI::ExistingFile);
  vavg->add_option("--windows", avg_opts->windows, "random windows to test")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  vavg->add_option("--seed", avg_opts->seed, "RNG seed")->capture_default_str();
  vavg->add_option("--tol", avg_opts->tol, "max abs difference allowed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  vavg->add_flag("--f64", avg_opts->use_f64, "verify in 64-bit arithmetic");
  vavg->callback(
      [avg_opts, &verify_result] { verify_result = run_verify_avg(*avg_opts); });

  auto grad_opts = std::make_shared<VerifyGradOpts>();
  auto* vgrad = app.add_subcommand(
      "verify-grad", "check every backward pass against finite differences");
  vgrad->add_option("--seeds", grad_opts->seeds, "check rounds")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  vgrad->add_option("--seed", grad_opts->seed, "base RNG seed")
      ->capture_default_str();
  vgrad->add_option("--tol", grad_opts->tol, "max relative error allowed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  vgrad->callback(
      [grad_opts, &verify_result] { verify_result = run_verify_grad(*grad_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return verify_result;
}
