// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <thread>
#include <vector>

#include "f16/errors.hpp"
#include "f16/features.hpp"
#include "f16/io.hpp"
#include "f16/ops.hpp"
#include "f16/rng.hpp"
#include "f16/tensor.hpp"

namespace f16 {

/// Where the 2x2 spatial max pool sits relative to the MLP.
enum class Pooling : int { kPost = 0, kPre = 1 };

/// Two-layer single-frame aligner: z -> (GELU(z W_A + b_A)) W_B + b_B.
template <std::floating_point T>
struct SingleFrameAlignerParams {
  Tensor<T> w_a;  // d x h
  Tensor<T> b_a;  // h
  Tensor<T> w_b;  // h x h
  Tensor<T> b_b;  // h

  std::size_t d() const { return w_a.dim(0); }
  std::size_t h() const { return b_b.dim(0); }

  void validate() const {
    if (w_a.rank() != 2 || w_b.rank() != 2 || b_a.rank() != 1 || b_b.rank() != 1 ||
        w_a.dim(1) != b_a.dim(0) || w_b.dim(0) != w_a.dim(1) ||
        w_b.dim(1) != b_b.dim(0) || w_b.dim(0) != w_b.dim(1)) {
      throw ShapeError("single-frame aligner dims inconsistent: W_A " +
                       dims_to_string(w_a.dims()) + ", W_B " +
                       dims_to_string(w_b.dims()));
    }
  }
};

/// Wide window aligner over w concatenated frames. Shapes:
///   W_P: (w*d) x (w*h), b_P: w*h, W_Q: (w*h) x h, b_Q: h.
template <std::floating_point T>
struct HfrAlignerParams {
  Tensor<T> w_p;
  Tensor<T> b_p;
  Tensor<T> w_q;
  Tensor<T> b_q;
  std::size_t window = 1;
  Pooling pooling = Pooling::kPost;

  std::size_t d() const { return w_p.dim(0) / window; }
  std::size_t h() const { return b_q.dim(0); }

  void validate() const {
    const std::size_t h_ = b_q.dim(0);
    if (window == 0 || w_p.rank() != 2 || w_q.rank() != 2 || b_p.rank() != 1 ||
        b_q.rank() != 1 || w_p.dim(0) % window != 0 ||
        w_p.dim(1) != window * h_ || b_p.dim(0) != window * h_ ||
        w_q.dim(0) != window * h_ || w_q.dim(1) != h_) {
      throw ShapeError("window aligner dims inconsistent: W_P " +
                       dims_to_string(w_p.dims()) + ", W_Q " +
                       dims_to_string(w_q.dims()) + ", window " +
                       std::to_string(window));
    }
  }
};

/// Pooled output of one window: tokens is m x h with m = floor(sqrt(p)/2)^2.
template <std::floating_point T>
struct VisualTokens {
  Tensor<T> tokens;
  std::size_t window_index = 0;
};

/// Seeded random single-frame aligner. Draw order is fixed and documented:
/// W_A row-major with bound sqrt(6/d), then b_A on [-0.1, 0.1], then W_B
/// row-major with bound sqrt(6/h), then b_B on [-0.1, 0.1].
template <std::floating_point T>
SingleFrameAlignerParams<T> random_single_frame_params(std::size_t d, std::size_t h,
                                                       std::uint64_t seed) {
  if (d == 0 || h == 0) throw ConfigError("aligner dims must be positive");
  SingleFrameAlignerParams<T> base{Tensor<T>({d, h}), Tensor<T>({h}),
                                   Tensor<T>({h, h}), Tensor<T>({h})};
  Rng rng(Rng::derive(seed, 0x62617365ULL));  // "base" stream
  const double bound_a = std::sqrt(6.0 / static_cast<double>(d));
  const double bound_b = std::sqrt(6.0 / static_cast<double>(h));
  for (std::size_t i = 0; i < base.w_a.size(); ++i) {
    base.w_a[i] = static_cast<T>(rng.uniform(-bound_a, bound_a));
  }
  for (std::size_t i = 0; i < h; ++i) {
    base.b_a[i] = static_cast<T>(rng.uniform(-0.1, 0.1));
  }
  for (std::size_t i = 0; i < base.w_b.size(); ++i) {
    base.w_b[i] = static_cast<T>(rng.uniform(-bound_b, bound_b));
  }
  for (std::size_t i = 0; i < h; ++i) {
    base.b_b[i] = static_cast<T>(rng.uniform(-0.1, 0.1));
  }
  return base;
}

/// z (p x d) -> (GELU(z W_A + b_A)) W_B + b_B, rows independent.
template <std::floating_point T>
Tensor<T> single_frame_forward(const Tensor<T>& z,
                               const SingleFrameAlignerParams<T>& params) {
  return linear(gelu(linear(z, params.w_a, params.b_a)), params.w_b, params.b_b);
}

/// Builds the window aligner so that at noise_scale = 0 its pre-pool output
/// is exactly the mean of the per-frame single-frame outputs:
///   W_P = blockdiag(W_A, ..., W_A) + off-diagonal Kaiming-Uniform noise,
///   b_P = [b_A; ...; b_A],  W_Q = [W_B; ...; W_B] / w,  b_Q = b_B.
/// The noise bound is noise_scale * sqrt(6 / (w*d)) (fan-in of W_P); entries
/// are drawn in a single row-major scan of W_P, skipping diagonal blocks.
template <std::floating_point T>
HfrAlignerParams<T> init_from_single_frame(const SingleFrameAlignerParams<T>& base,
                                           std::size_t w, double noise_scale,
                                           std::uint64_t seed,
                                           Pooling pooling = Pooling::kPost) {
  base.validate();
  if (w == 0) throw ConfigError("window size must be at least 1");
  if (noise_scale < 0.0) throw ConfigError("noise scale must be non-negative");
  const std::size_t d = base.d(), h = base.h();

  HfrAlignerParams<T> params;
  params.window = w;
  params.pooling = pooling;
  params.w_p = Tensor<T>({w * d, w * h});
  params.b_p = Tensor<T>({w * h});
  params.w_q = Tensor<T>({w * h, h});
  params.b_q = base.b_b;

  Rng rng(Rng::derive(seed, 0x696E6974ULL));  // "init" stream
  const double bound = noise_scale * std::sqrt(6.0 / static_cast<double>(w * d));
  for (std::size_t row = 0; row < w * d; ++row) {
    const std::size_t row_block = row / d;
    for (std::size_t col = 0; col < w * h; ++col) {
      if (col / h == row_block) {
        params.w_p(row, col) = base.w_a(row % d, col % h);
      } else {
        params.w_p(row, col) = static_cast<T>(rng.uniform(-bound, bound));
      }
    }
  }
  for (std::size_t k = 0; k < w; ++k) {
    for (std::size_t j = 0; j < h; ++j) params.b_p[k * h + j] = base.b_a[j];
  }
  const T inv_w = T(1) / static_cast<T>(w);
  for (std::size_t k = 0; k < w; ++k) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < h; ++j) {
        params.w_q(k * h + i, j) = base.w_b(i, j) * inv_w;
      }
    }
  }
  return params;
}

/// Every intermediate of one window pass, kept for the backward pass.
template <std::floating_point T>
struct WindowTrace {
  Tensor<T> mlp_input;   // post: p x (w*d); pre: m x (w*d) after per-frame pooling
  Tensor<T> hidden_pre;  // rows x (w*h), before GELU
  Tensor<T> hidden_act;  // rows x (w*h)
  Tensor<T> pre_pool;    // rows x h — the un-pooled token matrix
  Tensor<T> tokens;      // m x h
};

template <std::floating_point T>
WindowTrace<T> window_forward_trace(const WindowBatch<T>& win,
                                    const HfrAlignerParams<T>& params) {
  params.validate();
  if (win.frames.size() != params.window) {
    throw ShapeError("window holds " + std::to_string(win.frames.size()) +
                     " frames but aligner expects " + std::to_string(params.window));
  }
  WindowTrace<T> trace;
  if (params.pooling == Pooling::kPost) {
    trace.mlp_input = win.concat();
  } else {
    std::vector<Tensor<T>> pooled;
    pooled.reserve(win.frames.size());
    for (const auto& f : win.frames) pooled.push_back(pool_rows(f.z));
    trace.mlp_input = concat_feature_dim(pooled);
  }
  trace.hidden_pre = linear(trace.mlp_input, params.w_p, params.b_p);
  trace.hidden_act = gelu(trace.hidden_pre);
  trace.pre_pool = linear(trace.hidden_act, params.w_q, params.b_q);
  trace.tokens =
      params.pooling == Pooling::kPost ? pool_rows(trace.pre_pool) : trace.pre_pool;
  return trace;
}

template <std::floating_point T>
VisualTokens<T> window_forward(const WindowBatch<T>& win,
                               const HfrAlignerParams<T>& params) {
  return {window_forward_trace(win, params).tokens, win.window_index};
}

/// Windows the sequence and runs every window. With threads > 1, window j is
/// handled by worker j mod threads; each worker writes only its own output
/// slots, so results are bit-identical to the serial pass.
template <std::floating_point T>
std::vector<VisualTokens<T>> video_forward(const std::vector<FrameFeatures<T>>& seq,
                                           const HfrAlignerParams<T>& params,
                                           unsigned threads = 1) {
  const auto windows = partition_windows(seq, params.window);
  std::vector<VisualTokens<T>> out(windows.size());
  if (threads <= 1 || windows.size() <= 1) {
    for (std::size_t j = 0; j < windows.size(); ++j) {
      out[j] = window_forward(windows[j], params);
    }
    return out;
  }
  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(threads, windows.size()));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (unsigned tid = 0; tid < n_workers; ++tid) {
    pool.emplace_back([&, tid] {
      for (std::size_t j = tid; j < windows.size(); j += n_workers) {
        out[j] = window_forward(windows[j], params);
      }
    });
  }
  for (auto& worker : pool) worker.join();
  return out;
}

/// Gradient accumulator matching HfrAlignerParams.
template <std::floating_point T>
struct AlignerGrads {
  Tensor<T> dw_p;
  Tensor<T> db_p;
  Tensor<T> dw_q;
  Tensor<T> db_q;

  static AlignerGrads zeros_like(const HfrAlignerParams<T>& params) {
    return {Tensor<T>(params.w_p.dims()), Tensor<T>(params.b_p.dims()),
            Tensor<T>(params.w_q.dims()), Tensor<T>(params.b_q.dims())};
  }
  void add(const AlignerGrads& other) {
    add_inplace(dw_p, other.dw_p);
    add_inplace(db_p, other.db_p);
    add_inplace(dw_q, other.dw_q);
    add_inplace(db_q, other.db_q);
  }
  void scale(T factor) {
    scale_inplace(dw_p, factor);
    scale_inplace(db_p, factor);
    scale_inplace(dw_q, factor);
    scale_inplace(db_q, factor);
  }
};

/// Backward of window_forward_trace. Accumulates parameter gradients into
/// `grads` and returns d(loss)/d(z_k) for each frame in window order.
template <std::floating_point T>
std::vector<Tensor<T>> window_backward(const WindowBatch<T>& win,
                                       const HfrAlignerParams<T>& params,
                                       const WindowTrace<T>& trace,
                                       const Tensor<T>& d_tokens,
                                       AlignerGrads<T>& grads) {
  const std::size_t h = params.h(), d = params.d(), w = params.window;
  if (!d_tokens.same_dims(trace.tokens)) {
    throw ShapeError("token gradient dims " + dims_to_string(d_tokens.dims()) +
                     " do not match tokens " + dims_to_string(trace.tokens.dims()));
  }

  Tensor<T> d_pre_pool({trace.pre_pool.dim(0), h});
  if (params.pooling == Pooling::kPost) {
    const std::size_t side = grid_side(trace.pre_pool.dim(0));
    const std::size_t half = side / 2;
    d_pre_pool = max_pool_2x2_backward(trace.pre_pool.reshaped({side, side, h}),
                                       d_tokens.reshaped({half, half, h}))
                     .reshaped({side * side, h});
  } else {
    d_pre_pool = d_tokens;
  }

  LinearGrads<T> gq = linear_backward(trace.hidden_act, params.w_q, d_pre_pool);
  add_inplace(grads.dw_q, gq.dw);
  add_inplace(grads.db_q, gq.db);
  Tensor<T> d_hidden_pre = gelu_backward(trace.hidden_pre, gq.dx);
  LinearGrads<T> gp = linear_backward(trace.mlp_input, params.w_p, d_hidden_pre);
  add_inplace(grads.dw_p, gp.dw);
  add_inplace(grads.db_p, gp.db);

  // Split the concatenated-input gradient back into per-frame blocks.
  const std::size_t rows = gp.dx.dim(0);
  std::vector<Tensor<T>> dz;
  dz.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    Tensor<T> block({rows, d});
    for (std::size_t i = 0; i < rows; ++i) {
      const T* src = gp.dx.data() + i * (w * d) + k * d;
      T* dst = block.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
    if (params.pooling == Pooling::kPost) {
      dz.push_back(std::move(block));
    } else {
      const Tensor<T>& z = win.frames[k].z;
      const std::size_t side = grid_side(z.dim(0));
      const std::size_t half = side / 2;
      dz.push_back(max_pool_2x2_backward(z.reshaped({side, side, d}),
                                         block.reshaped({half, half, d}))
                       .reshaped({z.dim(0), d}));
    }
  }
  return dz;
}

/// Archive layout for window-aligner weights: records aligner/W_P, aligner/b_P,
/// aligner/W_Q, aligner/b_Q and aligner/meta = [w, d, h, p, pooling_code]
/// (pooling_code 0 = post, 1 = pre). `patches` records the patch count the
/// weights were built for.
void save_aligner(Archive& archive, const HfrAlignerParams<float>& params,
                  std::size_t patches);
HfrAlignerParams<float> load_aligner(const Archive& archive,
                                     std::size_t* patches_out = nullptr);

/// Single-frame weights under base/W_A, base/b_A, base/W_B, base/b_B.
void save_single_frame(Archive& archive, const SingleFrameAlignerParams<float>& base);
SingleFrameAlignerParams<float> load_single_frame(const Archive& archive);

}  // namespace f16
