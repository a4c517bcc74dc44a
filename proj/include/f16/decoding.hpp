// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <concepts>
#include <string>
#include <vector>

#include "f16/aligner.hpp"
#include "f16/errors.hpp"
#include "f16/features.hpp"
#include "f16/tensor.hpp"

namespace f16 {

enum class DecodeMethod { kRepeat, kTrim };

/// Test-time frame-rate reduction by an integer factor k = train/test.
struct DecodeConfig {
  int train_fps = 16;
  int test_fps = 16;
  DecodeMethod method = DecodeMethod::kRepeat;

  int k() const {
    if (test_fps < 1 || train_fps < 1) {
      throw ConfigError("frame rates must be positive");
    }
    if (train_fps % test_fps != 0) {
      throw ConfigError("test fps " + std::to_string(test_fps) +
                        " must divide train fps " + std::to_string(train_fps));
    }
    return train_fps / test_fps;
  }
};

/// Duplicates each of the s frames k times in place (frame-major order:
/// f0 f0 .. f1 f1 ..), producing a full-width window of s*k frames.
template <std::floating_point T>
WindowBatch<T> repeat_expand(const WindowBatch<T>& win, std::size_t k) {
  if (k == 0) throw ConfigError("repeat factor must be at least 1");
  WindowBatch<T> out;
  out.window_index = win.window_index;
  out.frames.reserve(win.frames.size() * k);
  for (const auto& f : win.frames) {
    for (std::size_t r = 0; r < k; ++r) out.frames.push_back(f);
  }
  return out;
}

/// Low-rate decoding by feature repetition: windows of s = w/k frames, each
/// frame's features repeated k times, then the unmodified full-rate aligner.
template <std::floating_point T>
std::vector<VisualTokens<T>> decode_repeat(const std::vector<FrameFeatures<T>>& seq,
                                           const HfrAlignerParams<T>& params,
                                           const DecodeConfig& cfg) {
  if (cfg.method != DecodeMethod::kRepeat) {
    throw ConfigError("decode_repeat called with a non-repeat config");
  }
  const std::size_t k = static_cast<std::size_t>(cfg.k());
  if (params.window % k != 0) {
    throw ConfigError("reduction factor " + std::to_string(k) +
                      " does not divide window size " +
                      std::to_string(params.window));
  }
  const std::size_t s = params.window / k;
  const auto windows = partition_windows(seq, s);
  std::vector<VisualTokens<T>> out;
  out.reserve(windows.size());
  for (const auto& win : windows) {
    out.push_back(window_forward(repeat_expand(win, k), params));
  }
  return out;
}

/// Leading submatrices of a full-rate aligner, sized for s-frame windows.
template <std::floating_point T>
struct TrimmedAlignerParams {
  Tensor<T> w_p;  // (s*d) x (s*h)
  Tensor<T> b_p;  // s*h
  Tensor<T> w_q;  // (s*h) x h
  Tensor<T> b_q;  // h
  std::size_t s = 1;
  Pooling pooling = Pooling::kPost;

  /// The trimmed weights form an ordinary window aligner of width s.
  HfrAlignerParams<T> as_aligner() const {
    HfrAlignerParams<T> params{w_p, b_p, w_q, b_q, s, pooling};
    params.validate();
    return params;
  }
};

/// Slices the leading (temporally first) blocks: W_P[:sd,:sh], b_P[:sh],
/// W_Q[:sh,:], b_Q unchanged.
template <std::floating_point T>
TrimmedAlignerParams<T> trim_aligner(const HfrAlignerParams<T>& params,
                                     std::size_t s) {
  params.validate();
  if (s < 1 || s > params.window) {
    throw ConfigError("trim width " + std::to_string(s) +
                      " out of range 1.." + std::to_string(params.window));
  }
  const std::size_t d = params.d(), h = params.h();
  TrimmedAlignerParams<T> trimmed;
  trimmed.s = s;
  trimmed.pooling = params.pooling;
  trimmed.w_p = Tensor<T>({s * d, s * h});
  for (std::size_t i = 0; i < s * d; ++i) {
    for (std::size_t j = 0; j < s * h; ++j) trimmed.w_p(i, j) = params.w_p(i, j);
  }
  trimmed.b_p = Tensor<T>({s * h});
  for (std::size_t j = 0; j < s * h; ++j) trimmed.b_p[j] = params.b_p[j];
  trimmed.w_q = Tensor<T>({s * h, h});
  for (std::size_t i = 0; i < s * h; ++i) {
    for (std::size_t j = 0; j < h; ++j) trimmed.w_q(i, j) = params.w_q(i, j);
  }
  trimmed.b_q = params.b_q;
  return trimmed;
}

/// Low-rate decoding through the trimmed weights; same windowing/padding
/// rule as full-rate decoding, with window width s.
template <std::floating_point T>
std::vector<VisualTokens<T>> decode_trimmed(const std::vector<FrameFeatures<T>>& seq,
                                            const TrimmedAlignerParams<T>& trimmed) {
  return video_forward(seq, trimmed.as_aligner());
}

}  // namespace f16
