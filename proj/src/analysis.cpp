// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "f16/analysis.hpp"

#include <cmath>
#include <cstdio>

namespace f16 {
namespace {

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

std::string CosineReport::to_text() const {
  std::string out = "frame  d_cos_before  d_cos_after  skipped\n";
  for (const auto& row : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%5d  %12.6f  %11.6f  %7zu\n", row.frame_index,
                  row.before, row.after, row.skipped_before + row.skipped_after);
    out += buf;
  }
  return out;
}

std::string CosineReport::to_csv() const {
  std::string out = "frame,d_cos_before,d_cos_after,skipped_before,skipped_after\n";
  for (const auto& row : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%zu,%zu\n", row.frame_index,
                  row.before, row.after, row.skipped_before, row.skipped_after);
    out += buf;
  }
  return out;
}

TokenBudget token_budget(std::size_t n_frames, std::size_t w, std::size_t p) {
  if (n_frames == 0 || w == 0 || p == 0) {
    throw ConfigError("token budget needs positive frame count, window, and patches");
  }
  TokenBudget budget;
  budget.windows = (n_frames + w - 1) / w;
  const std::size_t half = grid_side(p) / 2;
  budget.tokens_per_window = half * half;
  budget.total_tokens = budget.windows * budget.tokens_per_window;
  return budget;
}

CostConfig CostConfig::proxy_7b() {
  CostConfig cfg;
  cfg.fps = 16;
  cfg.duration_s = 110.0;
  cfg.w = 16;
  cfg.p = 729;
  cfg.d = 1152;
  cfg.h = 3584;
  cfg.patch_dim = 0;
  cfg.encoder_macs_per_frame = 346516538112.0;
  cfg.output_tokens = 32;
  cfg.width = 3584;
  cfg.alpha = 56.0;
  cfg.beta = 336.0;
  return cfg;
}

CostReport cost_model(const CostConfig& cfg) {
  if (cfg.fps < 1 || cfg.duration_s <= 0.0 || cfg.w == 0 || cfg.p == 0 ||
      cfg.d == 0 || cfg.h == 0 || cfg.width == 0) {
    throw ConfigError("cost model needs positive rates and dimensions");
  }
  if (cfg.encoder_macs_per_frame < 0.0 || cfg.alpha < 0.0 || cfg.beta < 0.0) {
    throw ConfigError("cost model constants must be non-negative");
  }
  if (cfg.encoder_macs_per_frame == 0.0 && cfg.patch_dim == 0) {
    throw ConfigError("set patch_dim (stub formula) or encoder_macs_per_frame");
  }

  CostReport report;
  report.config = cfg;
  report.frames = static_cast<std::size_t>(std::llround(cfg.fps * cfg.duration_s));
  const TokenBudget budget = token_budget(report.frames, cfg.w, cfg.p);
  report.windows = budget.windows;
  report.visual_tokens = budget.total_tokens;

  const double per_frame =
      cfg.encoder_macs_per_frame > 0.0
          ? cfg.encoder_macs_per_frame
          : static_cast<double>(cfg.p) * cfg.patch_dim * cfg.d;
  report.encoder_macs = static_cast<double>(report.frames) * per_frame;

  const double wd = static_cast<double>(cfg.w) * cfg.d;
  const double wh = static_cast<double>(cfg.w) * cfg.h;
  report.aligner_macs = static_cast<double>(report.windows) *
                        (static_cast<double>(cfg.p) * wd * wh +
                         static_cast<double>(cfg.p) * wh * cfg.h);

  const double n = static_cast<double>(report.visual_tokens + cfg.output_tokens);
  const double width = static_cast<double>(cfg.width);
  report.llm_proxy_macs = cfg.alpha * n * n * width + cfg.beta * n * width * width;
  return report;
}

std::string CostReport::to_text() const {
  std::string out;
  out += "frames          " + std::to_string(frames) + "\n";
  out += "windows         " + std::to_string(windows) + "\n";
  out += "visual_tokens   " + std::to_string(visual_tokens) + "\n";
  out += "encoder_macs    " + format("%.6e", encoder_macs) + "\n";
  out += "aligner_macs    " + format("%.6e", aligner_macs) + "\n";
  out += "llm_proxy_macs  " + format("%.6e", llm_proxy_macs) + "\n";
  out += "encoder_share   " + format("%.4f", encoder_share()) + "\n";
  out += "aligner_share   " + format("%.4f", aligner_share()) + "\n";
  out += "llm_proxy_share " + format("%.4f", llm_proxy_share()) + "\n";
  return out;
}

std::string CostReport::to_csv() const {
  std::string out =
      "frames,windows,visual_tokens,encoder_macs,aligner_macs,llm_proxy_macs,"
      "encoder_share,aligner_share,llm_proxy_share\n";
  out += std::to_string(frames) + "," + std::to_string(windows) + "," +
         std::to_string(visual_tokens) + "," + format("%.6e", encoder_macs) + "," +
         format("%.6e", aligner_macs) + "," + format("%.6e", llm_proxy_macs) + "," +
         format("%.6f", encoder_share()) + "," + format("%.6f", aligner_share()) +
         "," + format("%.6f", llm_proxy_share()) + "\n";
  return out;
}

}  // namespace f16
