// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <concepts>
#include <cstring>
#include <string>
#include <vector>

#include "f16/errors.hpp"
#include "f16/features.hpp"
#include "f16/ops.hpp"
#include "f16/tensor.hpp"

namespace f16 {

/// One frame's similarity to the reference frame, averaged over positions,
/// before and after per-frame 2x2 spatial max pooling. Positions where
/// either vector has zero norm are skipped and counted.
struct CosineRow {
  int frame_index = 0;
  double before = 0.0;
  double after = 0.0;
  std::size_t skipped_before = 0;
  std::size_t skipped_after = 0;
};

struct CosineReport {
  int reference_index = 0;
  std::vector<CosineRow> rows;

  std::string to_text() const;
  std::string to_csv() const;
};

namespace detail {

/// Mean cosine similarity across matching rows of two equal-shape matrices.
/// Bit-identical rows score exactly 1.0 (no rounding); zero-norm rows are
/// skipped so the mean stays within [-1, 1].
template <std::floating_point T>
double mean_row_cosine(const Tensor<T>& a, const Tensor<T>& b,
                       std::size_t* skipped) {
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const T* ra = a.data() + i * cols;
    const T* rb = b.data() + i * cols;
    if (std::memcmp(ra, rb, cols * sizeof(T)) == 0) {
      bool zero = true;
      for (std::size_t j = 0; j < cols && zero; ++j) zero = (ra[j] == T(0));
      if (zero) {
        ++*skipped;
      } else {
        sum += 1.0;
        ++used;
      }
      continue;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double va = static_cast<double>(ra[j]);
      const double vb = static_cast<double>(rb[j]);
      dot += va * vb;
      na += va * va;
      nb += vb * vb;
    }
    if (na == 0.0 || nb == 0.0) {
      ++*skipped;
      continue;
    }
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    sum += c;
    ++used;
  }
  return used == 0 ? 0.0 : sum / static_cast<double>(used);
}

}  // namespace detail

/// Per-frame similarity to seq[reference]: `before` compares raw p x d
/// features position-wise; `after` compares the m x d features left by a
/// per-frame 2x2 max pool over the patch grid.
template <std::floating_point T>
CosineReport cosine_report(const std::vector<FrameFeatures<T>>& seq,
                           std::size_t reference) {
  if (seq.empty()) throw ConfigError("cosine report needs at least one frame");
  if (reference >= seq.size()) {
    throw ConfigError("reference index " + std::to_string(reference) +
                      " out of range for " + std::to_string(seq.size()) + " frames");
  }
  const Tensor<T>& ref = seq[reference].z;
  grid_side(ref.dim(0));  // patch count must form a square grid
  const Tensor<T> ref_pooled = pool_rows(ref);

  CosineReport report;
  report.reference_index = seq[reference].frame_index;
  report.rows.reserve(seq.size());
  for (const auto& frame : seq) {
    if (!frame.z.same_dims(ref)) {
      throw ShapeError("frame features " + dims_to_string(frame.z.dims()) +
                       " do not match reference " + dims_to_string(ref.dims()));
    }
    CosineRow row;
    row.frame_index = frame.frame_index;
    row.before = detail::mean_row_cosine(frame.z, ref, &row.skipped_before);
    row.after =
        detail::mean_row_cosine(pool_rows(frame.z), ref_pooled, &row.skipped_after);
    report.rows.push_back(row);
  }
  return report;
}

/// Window/token arithmetic for a clip: ceil(n/w) windows, floor(sqrt(p)/2)^2
/// tokens per window.
struct TokenBudget {
  std::size_t windows = 0;
  std::size_t tokens_per_window = 0;
  std::size_t total_tokens = 0;
};

TokenBudget token_budget(std::size_t n_frames, std::size_t w, std::size_t p);

/// Analytical multiply-accumulate model of the pipeline. The encoder term
/// uses the stub formula p*patch_dim*d unless encoder_macs_per_frame is set;
/// the downstream-model proxy is alpha*n^2*width + beta*n*width^2 with
/// n = visual_tokens + output_tokens (attention + MLP shape of a decoder).
struct CostConfig {
  int fps = 16;
  double duration_s = 2.0;
  std::size_t w = 16;
  std::size_t p = 16;
  std::size_t d = 24;
  std::size_t h = 32;
  std::size_t patch_dim = 64;
  double encoder_macs_per_frame = 0.0;  // 0 = use the stub formula
  std::size_t output_tokens = 8;
  std::size_t width = 32;
  double alpha = 4.0;   // 2 * layers: attention term scale
  double beta = 24.0;   // 12 * layers: MLP term scale

  /// Documented 7B-scale constants: 110 s clip at 16 fps; 27-layer ViT at
  /// width 1152 over 729 patches per frame, i.e. per-frame MACs
  /// 27*(729*12*1152^2 + 2*729^2*1152) = 346,516,538,112; decoder proxy with
  /// width 3584 and 28 layers folded into alpha = 2*28, beta = 12*28.
  static CostConfig proxy_7b();
};

struct CostReport {
  CostConfig config;
  std::size_t frames = 0;
  std::size_t windows = 0;
  std::size_t visual_tokens = 0;
  double encoder_macs = 0.0;
  double aligner_macs = 0.0;
  double llm_proxy_macs = 0.0;

  double total_macs() const { return encoder_macs + aligner_macs + llm_proxy_macs; }
  double encoder_share() const { return encoder_macs / total_macs(); }
  double aligner_share() const { return aligner_macs / total_macs(); }
  double llm_proxy_share() const { return llm_proxy_macs / total_macs(); }

  std::string to_text() const;
  std::string to_csv() const;
};

CostReport cost_model(const CostConfig& cfg);

}  // namespace f16
