// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "f16/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "f16/errors.hpp"
#include "f16/ops.hpp"
#include "f16/trainer.hpp"

namespace f16 {

double rel_err(const Tensor64& a, const Tensor64& b) {
  if (!a.same_dims(b)) {
    throw OracleError("rel_err dims " + dims_to_string(a.dims()) + " vs " +
                      dims_to_string(b.dims()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

Tensor64 random_tensor(const std::vector<std::size_t>& dims, Rng& rng, double lo,
                       double hi) {
  Tensor64 t(dims);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

namespace {

constexpr double kStep = 1e-5;
constexpr double kTieGap = 1e-3;  // min top-two gap per pooled block

double weighted_sum(const Tensor64& values, const Tensor64& weights) {
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += values[i] * weights[i];
  return sum;
}

/// Smallest (max - second max) over all 2x2 pooling blocks and channels of a
/// g x g x c grid. Below kTieGap the max-pool subgradient is ambiguous and
/// the instance must be re-drawn.
double min_block_gap(const Tensor64& grid) {
  const std::size_t g = grid.dim(0), c = grid.dim(2), half = g / 2;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t bi = 0; bi < half; ++bi) {
    for (std::size_t bj = 0; bj < half; ++bj) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double top = -std::numeric_limits<double>::infinity(), second = top;
        for (std::size_t s = 0; s < 4; ++s) {
          const double v = grid(2 * bi + s / 2, 2 * bj + s % 2, ch);
          if (v > top) {
            second = top;
            top = v;
          } else if (v > second) {
            second = v;
          }
        }
        worst = std::min(worst, top - second);
      }
    }
  }
  return worst;
}

double min_block_gap_rows(const Tensor64& rows) {
  const std::size_t side = grid_side(rows.dim(0));
  return min_block_gap(rows.reshaped({side, side, rows.dim(1)}));
}

GradCheckCase check_linear(std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 1));
  const Tensor64 x = random_tensor({3, 4}, rng, -2.0, 2.0);
  const Tensor64 w = random_tensor({4, 5}, rng, -2.0, 2.0);
  const Tensor64 b = random_tensor({5}, rng, -1.0, 1.0);
  const Tensor64 c = random_tensor({3, 5}, rng, -1.0, 1.0);

  const LinearGrads<double> grads = linear_backward(x, w, c);
  const Tensor64 fd_x = finite_difference_gradient(
      [&](const Tensor64& t) { return weighted_sum(linear(t, w, b), c); }, x, kStep);
  const Tensor64 fd_w = finite_difference_gradient(
      [&](const Tensor64& t) { return weighted_sum(linear(x, t, b), c); }, w, kStep);
  const Tensor64 fd_b = finite_difference_gradient(
      [&](const Tensor64& t) { return weighted_sum(linear(x, w, t), c); }, b, kStep);

  return {"linear", std::max({rel_err(grads.dx, fd_x), rel_err(grads.dw, fd_w),
                              rel_err(grads.db, fd_b)})};
}

GradCheckCase check_gelu(std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 2));
  const Tensor64 x = random_tensor({2, 7}, rng, -3.0, 3.0);
  const Tensor64 c = random_tensor({2, 7}, rng, -1.0, 1.0);
  const Tensor64 analytic = gelu_backward(x, c);
  const Tensor64 fd = finite_difference_gradient(
      [&](const Tensor64& t) { return weighted_sum(gelu(t), c); }, x, kStep);
  return {"gelu", rel_err(analytic, fd)};
}

GradCheckCase check_max_pool(std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(Rng::derive(Rng::derive(seed, 3), attempt));
    const Tensor64 grid = random_tensor({4, 4, 2}, rng, -1.0, 1.0);
    if (min_block_gap(grid) < kTieGap) continue;
    const Tensor64 c = random_tensor({2, 2, 2}, rng, -1.0, 1.0);
    const Tensor64 analytic = max_pool_2x2_backward(grid, c);
    const Tensor64 fd = finite_difference_gradient(
        [&](const Tensor64& t) { return weighted_sum(max_pool_2x2(t), c); }, grid,
        kStep);
    return {"max_pool", rel_err(analytic, fd)};
  }
}

/// Tiny end-to-end instance: two 4x3 frames through a w=2 aligner (h=5) and
/// a linear head into a 2-class cross-entropy loss.
struct PipelineInstance {
  WindowBatch<double> win;
  HfrAlignerParams<double> params;
  Tensor64 head_w;
  Tensor64 head_b;
  int label = 0;
};

double pipeline_loss(const PipelineInstance& inst) {
  const WindowTrace<double> trace = window_forward_trace(inst.win, inst.params);
  const std::size_t m = trace.tokens.dim(0), h = trace.tokens.dim(1);
  const Tensor64 logits =
      linear(trace.tokens.reshaped({std::size_t{1}, m * h}), inst.head_w,
             inst.head_b);
  return softmax_cross_entropy(logits, inst.label).first;
}

GradCheckCase check_pipeline(std::uint64_t seed, Pooling pooling) {
  const std::uint64_t tag = pooling == Pooling::kPost ? 4 : 5;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(Rng::derive(Rng::derive(seed, tag), attempt));
    PipelineInstance inst;
    const auto base = random_single_frame_params<double>(3, 5, rng.next());
    inst.params = init_from_single_frame(base, 2, 1.0, rng.next(), pooling);
    inst.win.window_index = 0;
    inst.win.frames.push_back({random_tensor({4, 3}, rng, -1.0, 1.0), 0, 0.0f});
    inst.win.frames.push_back({random_tensor({4, 3}, rng, -1.0, 1.0), 1, 0.0625f});
    inst.head_w = random_tensor({5, 2}, rng, -1.0, 1.0);
    inst.head_b = random_tensor({2}, rng, -0.5, 0.5);
    inst.label = 0;

    // Re-draw when any pooled block is near a tie (non-unique subgradient).
    const WindowTrace<double> trace = window_forward_trace(inst.win, inst.params);
    if (inst.params.pooling == Pooling::kPost) {
      if (min_block_gap_rows(trace.pre_pool) < kTieGap) continue;
    } else {
      if (std::min(min_block_gap_rows(inst.win.frames[0].z),
                   min_block_gap_rows(inst.win.frames[1].z)) < kTieGap) {
        continue;
      }
    }

    // Analytic gradients through head, pooling, and both MLP layers.
    const std::size_t m = trace.tokens.dim(0), h = trace.tokens.dim(1);
    const Tensor64 flat = trace.tokens.reshaped({std::size_t{1}, m * h});
    const Tensor64 logits = linear(flat, inst.head_w, inst.head_b);
    const auto [loss, dlogits] = softmax_cross_entropy(logits, inst.label);
    const LinearGrads<double> gh = linear_backward(flat, inst.head_w, dlogits);
    AlignerGrads<double> grads = AlignerGrads<double>::zeros_like(inst.params);
    const std::vector<Tensor64> dz = window_backward(
        inst.win, inst.params, trace, gh.dx.reshaped({m, h}), grads);

    const auto fd_of = [&](Tensor64 PipelineInstance::* field) {
      PipelineInstance probe_inst = inst;
      return finite_difference_gradient(
          [&](const Tensor64& t) {
            probe_inst.*field = t;
            return pipeline_loss(probe_inst);
          },
          inst.*field, kStep);
    };
    const auto fd_of_param = [&](Tensor64 HfrAlignerParams<double>::* field) {
      PipelineInstance probe_inst = inst;
      return finite_difference_gradient(
          [&](const Tensor64& t) {
            probe_inst.params.*field = t;
            return pipeline_loss(probe_inst);
          },
          inst.params.*field, kStep);
    };
    const auto fd_of_frame = [&](std::size_t k) {
      PipelineInstance probe_inst = inst;
      return finite_difference_gradient(
          [&](const Tensor64& t) {
            probe_inst.win.frames[k].z = t;
            return pipeline_loss(probe_inst);
          },
          inst.win.frames[k].z, kStep);
    };

    double worst = 0.0;
    worst = std::max(worst, rel_err(grads.dw_p, fd_of_param(&HfrAlignerParams<double>::w_p)));
    worst = std::max(worst, rel_err(grads.db_p, fd_of_param(&HfrAlignerParams<double>::b_p)));
    worst = std::max(worst, rel_err(grads.dw_q, fd_of_param(&HfrAlignerParams<double>::w_q)));
    worst = std::max(worst, rel_err(grads.db_q, fd_of_param(&HfrAlignerParams<double>::b_q)));
    worst = std::max(worst, rel_err(gh.dw, fd_of(&PipelineInstance::head_w)));
    worst = std::max(worst, rel_err(gh.db, fd_of(&PipelineInstance::head_b)));
    worst = std::max(worst, rel_err(dz[0], fd_of_frame(0)));
    worst = std::max(worst, rel_err(dz[1], fd_of_frame(1)));
    return {pooling == Pooling::kPost ? "pipeline_post" : "pipeline_pre", worst};
  }
}

}  // namespace

std::vector<GradCheckCase> run_gradient_checks(std::uint64_t seed) {
  return {check_linear(seed), check_gelu(seed), check_max_pool(seed),
          check_pipeline(seed, Pooling::kPost), check_pipeline(seed, Pooling::kPre)};
}

double worst_gradient_error(std::uint64_t seed, int n_seeds) {
  if (n_seeds < 1) throw ConfigError("need at least one gradient-check round");
  double worst = 0.0;
  for (int i = 0; i < n_seeds; ++i) {
    for (const auto& item : run_gradient_checks(seed + static_cast<std::uint64_t>(i))) {
      worst = std::max(worst, item.max_rel_err);
    }
  }
  return worst;
}

}  // namespace f16
