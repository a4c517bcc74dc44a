// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "f16/aligner.hpp"
#include "f16/errors.hpp"
#include "f16/features.hpp"
#include "f16/io.hpp"
#include "f16/ops.hpp"
#include "f16/rng.hpp"
#include "f16/tensor.hpp"

namespace f16 {

// End-to-end desk-scale pipeline: frozen random encoder, trainable window
// aligner, trainable linear head. The head classifies the rotation
// direction of a synthetic orbiting dot; window width equals fps, so one
// window always covers one second of video.

/// Class labels: 0 = clockwise (direction -1), 1 = counter-clockwise (+1).
inline constexpr int kLabelCw = 0;
inline constexpr int kLabelCcw = 1;

inline int label_to_direction(int label) {
  if (label != kLabelCw && label != kLabelCcw) {
    throw ConfigError("label must be 0 (cw) or 1 (ccw)");
  }
  return label == kLabelCw ? -1 : 1;
}

template <std::floating_point T>
struct ToyModel {
  EncoderStub<T> encoder;   // frozen
  HfrAlignerParams<T> aligner;  // trainable
  Tensor<T> head_w;         // (m*h) x classes, trainable
  Tensor<T> head_b;         // classes, trainable
  std::size_t classes = 2;
  int fps = 16;

  /// Tokens per window, m = floor(sqrt(p)/2)^2.
  std::size_t token_count() const {
    const std::size_t half = grid_side(encoder.patches()) / 2;
    return half * half;
  }

  void validate() const {
    aligner.validate();
    const std::size_t m = token_count();
    const std::size_t h = aligner.h();
    if (head_w.rank() != 2 || head_w.dim(0) != m * h || head_w.dim(1) != classes ||
        head_b.rank() != 1 || head_b.dim(0) != classes) {
      throw ShapeError("head dims " + dims_to_string(head_w.dims()) +
                       " do not match " + std::to_string(m * h) + " inputs and " +
                       std::to_string(classes) + " classes");
    }
    if (aligner.window != static_cast<std::size_t>(fps)) {
      throw ConfigError("aligner window " + std::to_string(aligner.window) +
                        " must equal fps " + std::to_string(fps) +
                        " (one-second windows)");
    }
    if (static_cast<std::size_t>(encoder.d()) != aligner.d()) {
      throw ShapeError("encoder width " + std::to_string(encoder.d()) +
                       " does not match aligner input width " +
                       std::to_string(aligner.d()));
    }
  }
};

struct ToyModelConfig {
  int fps = 16;          // window width = fps (one-second windows)
  int side = 32;         // frame side in pixels
  int patch_grid = 4;    // sqrt(p)
  int d = 24;            // encoder feature width
  int h = 32;            // token width
  double noise_scale = 1.0;
  std::size_t classes = 2;
  Pooling pooling = Pooling::kPost;
  std::uint64_t seed = 1;
};

/// Builds encoder + block-initialized aligner + zero head. The zero head
/// makes the untrained loss exactly ln(classes).
template <std::floating_point T>
ToyModel<T> make_toy_model(const ToyModelConfig& cfg) {
  if (cfg.fps != 1 && cfg.fps != 16) {
    throw ConfigError("fps must be 1 or 16, got " + std::to_string(cfg.fps));
  }
  if (cfg.classes < 2) throw ConfigError("need at least two classes");
  if (cfg.patch_grid < 2 || cfg.side < cfg.patch_grid ||
      cfg.side % cfg.patch_grid != 0) {
    throw ConfigError("side must be a multiple of patch_grid (both >= 2)");
  }
  const int patch_side = cfg.side / cfg.patch_grid;
  EncoderStub<T> encoder(cfg.patch_grid, patch_side * patch_side, cfg.d, cfg.seed);
  const auto base = random_single_frame_params<T>(
      static_cast<std::size_t>(cfg.d), static_cast<std::size_t>(cfg.h), cfg.seed);
  HfrAlignerParams<T> aligner = init_from_single_frame(
      base, static_cast<std::size_t>(cfg.fps), cfg.noise_scale, cfg.seed,
      cfg.pooling);
  ToyModel<T> model{std::move(encoder), std::move(aligner),
                    Tensor<T>({(static_cast<std::size_t>(cfg.patch_grid / 2) *
                                (cfg.patch_grid / 2)) *
                                   static_cast<std::size_t>(cfg.h),
                               cfg.classes}),
                    Tensor<T>({cfg.classes}), cfg.classes, cfg.fps};
  model.validate();
  return model;
}

struct MotionItem {
  RawVideo video;
  int label = kLabelCw;
  double speed = 0.0;  // revolutions per second
};

struct MotionDataset {
  std::vector<MotionItem> train;
  std::vector<MotionItem> test;
  std::vector<double> speeds;
};

struct MotionDatasetConfig {
  std::uint64_t seed = 1;
  std::size_t n_train = 240;
  std::size_t n_test = 60;
  std::vector<double> speeds = {0.75};
  double duration_s = 2.0;
  int native_fps = 16;
  int side = 32;
};

/// Balanced cw/ccw clips with per-item random phase. Speeds must make the
/// task well-posed at 16 fps (r < 8, no aliasing) and ill-posed at 1 fps
/// (some r with fractional part > 1/2 aliases).
inline MotionDataset make_motion_dataset(const MotionDatasetConfig& cfg) {
  if (cfg.speeds.empty()) throw ConfigError("need at least one rotation speed");
  bool any_aliases = false;
  for (const double r : cfg.speeds) {
    if (r <= 0.0) throw ConfigError("rotation speed must be positive");
    if (r >= 8.0) {
      throw ConfigError("speed " + std::to_string(r) +
                        " rev/s aliases at 16 fps (must be < 8)");
    }
    if (r - std::floor(r) > 0.5) any_aliases = true;
  }
  if (!any_aliases) {
    throw ConfigError("no listed speed aliases at 1 fps "
                      "(need fractional part > 1/2)");
  }

  MotionDataset dataset;
  dataset.speeds = cfg.speeds;
  const auto fill = [&](std::vector<MotionItem>& items, std::size_t count,
                        std::uint64_t split_tag) {
    items.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      MotionItem item;
      item.label = static_cast<int>(i % 2);
      item.speed = cfg.speeds[(i / 2) % cfg.speeds.size()];
      const std::uint64_t item_seed =
          Rng::derive(Rng::derive(cfg.seed, split_tag), i);
      item.video = generate_rotating_dot(item_seed, item.speed,
                                         label_to_direction(item.label),
                                         cfg.duration_s, cfg.native_fps, cfg.side);
      items.push_back(std::move(item));
    }
  };
  fill(dataset.train, cfg.n_train, 0x747261696EULL);  // "train"
  fill(dataset.test, cfg.n_test, 0x74657374ULL);      // "test"
  return dataset;
}

/// Samples the clip at `fps` (capped) and encodes the selected frames.
template <std::floating_point T>
std::vector<FrameFeatures<T>> extract_features(const EncoderStub<T>& encoder,
                                               const RawVideo& video, int fps) {
  const auto indices =
      sample_frame_indices(video.frames.size(), video.native_fps, fps, kFrameCap);
  return encoder.encode(video, indices);
}

/// Everything one forward pass produces, kept for the backward pass.
template <std::floating_point T>
struct ModelTrace {
  std::vector<WindowBatch<T>> windows;
  std::vector<WindowTrace<T>> traces;
  Tensor<T> mean_tokens;  // m x h, averaged over windows
  Tensor<T> flat;         // 1 x (m*h)
  Tensor<T> logits;       // 1 x classes
};

template <std::floating_point T>
ModelTrace<T> model_forward(const ToyModel<T>& model,
                            const std::vector<FrameFeatures<T>>& features) {
  model.validate();
  ModelTrace<T> trace;
  trace.windows = partition_windows(features, model.aligner.window);
  trace.traces.reserve(trace.windows.size());
  for (const auto& win : trace.windows) {
    trace.traces.push_back(window_forward_trace(win, model.aligner));
  }
  const std::size_t m = model.token_count(), h = model.aligner.h();
  trace.mean_tokens = Tensor<T>({m, h});
  for (const auto& wt : trace.traces) add_inplace(trace.mean_tokens, wt.tokens);
  scale_inplace(trace.mean_tokens, T(1) / static_cast<T>(trace.traces.size()));
  trace.flat = trace.mean_tokens.reshaped({std::size_t{1}, m * h});
  trace.logits = linear(trace.flat, model.head_w, model.head_b);
  return trace;
}

/// Numerically stable softmax cross-entropy. Returns the loss and the logit
/// gradient (softmax - onehot). A zero-logit row gives exactly ln(classes).
template <std::floating_point T>
std::pair<double, Tensor<T>> softmax_cross_entropy(const Tensor<T>& logits,
                                                   int label) {
  if (logits.rank() != 2 || logits.dim(0) != 1) {
    throw ShapeError("expected 1 x classes logits, got " +
                     dims_to_string(logits.dims()));
  }
  const std::size_t c = logits.dim(1);
  if (label < 0 || static_cast<std::size_t>(label) >= c) {
    throw ConfigError("label " + std::to_string(label) + " out of range for " +
                      std::to_string(c) + " classes");
  }
  T max_logit = logits[0];
  for (std::size_t j = 1; j < c; ++j) max_logit = std::max(max_logit, logits[j]);
  double sum_exp = 0.0;
  std::vector<double> shifted(c);
  for (std::size_t j = 0; j < c; ++j) {
    shifted[j] = std::exp(static_cast<double>(logits[j] - max_logit));
    sum_exp += shifted[j];
  }
  const double loss =
      std::log(sum_exp) -
      static_cast<double>(logits[static_cast<std::size_t>(label)] - max_logit);
  Tensor<T> dlogits({std::size_t{1}, c});
  for (std::size_t j = 0; j < c; ++j) {
    dlogits[j] = static_cast<T>(shifted[j] / sum_exp) -
                 (static_cast<int>(j) == label ? T(1) : T(0));
  }
  return {loss, std::move(dlogits)};
}

/// Gradients for every trainable parameter (encoder excluded: frozen).
template <std::floating_point T>
struct ModelGrads {
  AlignerGrads<T> aligner;
  Tensor<T> dhead_w;
  Tensor<T> dhead_b;

  static ModelGrads zeros_like(const ToyModel<T>& model) {
    return {AlignerGrads<T>::zeros_like(model.aligner),
            Tensor<T>(model.head_w.dims()), Tensor<T>(model.head_b.dims())};
  }
  void scale(T factor) {
    aligner.scale(factor);
    scale_inplace(dhead_w, factor);
    scale_inplace(dhead_b, factor);
  }
};

/// Backward through head, window mean, and every window's aligner pass.
/// Window gradients are reduced in window-index order (deterministic).
template <std::floating_point T>
void model_backward(const ToyModel<T>& model, const ModelTrace<T>& trace,
                    const Tensor<T>& dlogits, ModelGrads<T>& grads) {
  LinearGrads<T> gh = linear_backward(trace.flat, model.head_w, dlogits);
  add_inplace(grads.dhead_w, gh.dw);
  add_inplace(grads.dhead_b, gh.db);
  const std::size_t m = model.token_count(), h = model.aligner.h();
  Tensor<T> d_mean = gh.dx.reshaped({m, h});
  scale_inplace(d_mean, T(1) / static_cast<T>(trace.traces.size()));
  for (std::size_t j = 0; j < trace.traces.size(); ++j) {
    window_backward(trace.windows[j], model.aligner, trace.traces[j], d_mean,
                    grads.aligner);
  }
}

/// Loss and logits for one clip at the model's frame rate.
template <std::floating_point T>
std::pair<double, Tensor<T>> forward_loss(const ToyModel<T>& model,
                                          const RawVideo& video, int label,
                                          int fps) {
  if (fps != 1 && fps != 16) throw ConfigError("fps must be 1 or 16");
  if (fps != model.fps) {
    throw ConfigError("model expects " + std::to_string(model.fps) + " fps, got " +
                      std::to_string(fps));
  }
  const auto features = extract_features(model.encoder, video, fps);
  const ModelTrace<T> trace = model_forward(model, features);
  auto [loss, dlogits] = softmax_cross_entropy(trace.logits, label);
  return {loss, trace.logits};
}

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 30;
  int batch = 4;
  std::uint64_t seed = 1;
  int fps = 16;

  void validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
    if (epochs < 0) throw ConfigError("epoch count must be non-negative");
    if (batch < 1) throw ConfigError("batch size must be at least 1");
    if (fps != 1 && fps != 16) throw ConfigError("fps must be 1 or 16");
  }
};

struct TrainReport {
  std::vector<double> epoch_losses;
  double test_accuracy = 0.0;

  std::string to_text() const {
    std::string out;
    char buf[64];
    for (std::size_t k = 0; k < epoch_losses.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "epoch %zu loss %.6f\n", k + 1,
                    epoch_losses[k]);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), "test_accuracy %.6f\n", test_accuracy);
    out += buf;
    return out;
  }
};

/// Argmax-logit accuracy over a split; ties break toward the lower class.
template <std::floating_point T>
double evaluate(const ToyModel<T>& model, const std::vector<MotionItem>& items,
                int fps) {
  if (items.empty()) throw ConfigError("cannot evaluate an empty split");
  std::size_t correct = 0;
  for (const auto& item : items) {
    const auto features = extract_features(model.encoder, item.video, fps);
    const ModelTrace<T> trace = model_forward(model, features);
    std::size_t pred = 0;
    for (std::size_t j = 1; j < trace.logits.dim(1); ++j) {
      if (trace.logits[j] > trace.logits[pred]) pred = j;
    }
    if (static_cast<int>(pred) == item.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

/// Minibatch SGD with a per-epoch seeded shuffle. Features are extracted
/// once per item (the encoder is frozen, so they never change). The batch
/// gradient is averaged in batch order; updates happen between batches only.
template <std::floating_point T>
TrainReport train(ToyModel<T>& model, const MotionDataset& dataset,
                  const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  if (cfg.fps != model.fps) {
    throw ConfigError("train fps " + std::to_string(cfg.fps) +
                      " does not match model fps " + std::to_string(model.fps));
  }
  if (dataset.test.empty()) throw ConfigError("dataset has no test split");
  if (dataset.train.empty() && cfg.epochs > 0) {
    throw ConfigError("dataset has no train split");
  }

  std::vector<std::vector<FrameFeatures<T>>> cached;
  cached.reserve(dataset.train.size());
  for (const auto& item : dataset.train) {
    cached.push_back(extract_features(model.encoder, item.video, cfg.fps));
  }

  TrainReport report;
  Rng shuffle_rng(Rng::derive(cfg.seed, 0x73687566666C65ULL));  // "shuffle"
  std::vector<std::size_t> order(dataset.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {  // Fisher-Yates
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(),
                                        start + static_cast<std::size_t>(cfg.batch));
      ModelGrads<T> grads = ModelGrads<T>::zeros_like(model);
      for (std::size_t slot = start; slot < stop; ++slot) {
        const std::size_t item_idx = order[slot];
        const ModelTrace<T> trace = model_forward(model, cached[item_idx]);
        auto [loss, dlogits] =
            softmax_cross_entropy(trace.logits, dataset.train[item_idx].label);
        if (!std::isfinite(loss)) {
          throw TrainingError("non-finite loss at epoch " +
                              std::to_string(epoch + 1) + " item " +
                              std::to_string(item_idx));
        }
        loss_sum += loss;
        model_backward(model, trace, dlogits, grads);
      }
      grads.scale(T(1) / static_cast<T>(stop - start));
      const T step = static_cast<T>(-cfg.learning_rate);
      axpy_inplace(model.aligner.w_p, step, grads.aligner.dw_p);
      axpy_inplace(model.aligner.b_p, step, grads.aligner.db_p);
      axpy_inplace(model.aligner.w_q, step, grads.aligner.dw_q);
      axpy_inplace(model.aligner.b_q, step, grads.aligner.db_q);
      axpy_inplace(model.head_w, step, grads.dhead_w);
      axpy_inplace(model.head_b, step, grads.dhead_b);
    }
    report.epoch_losses.push_back(loss_sum /
                                  static_cast<double>(dataset.train.size()));
  }
  report.test_accuracy = evaluate(model, dataset.test, cfg.fps);
  return report;
}

/// Checkpoint layout: encoder/proj + encoder/meta = [patch_grid, patch_dim,
/// d], the aligner records, then head/W, head/b, head/meta = [classes, fps].
void save_model(Archive& archive, const ToyModel<float>& model);
ToyModel<float> load_model(const Archive& archive);

}  // namespace f16
