// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "f16/errors.hpp"
#include "f16/ops.hpp"
#include "f16/rng.hpp"
#include "f16/tensor.hpp"

namespace f16 {

/// Grayscale clip held fully in memory. Each frame is side*side pixels,
/// row-major, values in [0, 1].
struct RawVideo {
  std::vector<std::vector<float>> frames;
  int side = 0;
  int native_fps = 0;
  double duration_s = 0.0;
};

/// Per-frame patch features: z is patches x d, plus provenance of which
/// native frame produced it.
template <std::floating_point T>
struct FrameFeatures {
  Tensor<T> z;
  int frame_index = 0;
  float timestamp_s = 0.0f;
};

/// A fixed-size group of w consecutive frames feeding one aligner pass.
template <std::floating_point T>
struct WindowBatch {
  std::vector<FrameFeatures<T>> frames;
  std::size_t window_index = 0;

  /// Feature-dimension concatenation, patches x (w*d), frame order preserved.
  Tensor<T> concat() const {
    std::vector<Tensor<T>> parts;
    parts.reserve(frames.size());
    for (const auto& f : frames) parts.push_back(f.z);
    return concat_feature_dim(parts);
  }
};

/// Default ceiling on sampled frames per clip (110 seconds at 16 fps).
inline constexpr std::size_t kFrameCap = 1760;

/// Picks native-frame indices for decoding at target_fps, never exceeding
/// max_frames. Under the cap the stride is native/target; over it, exactly
/// max_frames indices are spread evenly across the clip.
std::vector<std::size_t> sample_frame_indices(std::size_t total_frames,
                                              int native_fps, int target_fps,
                                              std::size_t max_frames);

/// Synthetic motion clip: a Gaussian dot orbiting the frame center at
/// revs_per_s, direction +1 counter-clockwise / -1 clockwise in image
/// coordinates, with a seed-derived random start angle.
RawVideo generate_rotating_dot(std::uint64_t seed, double revs_per_s, int direction,
                               double duration_s, int native_fps, int side);

/// Frozen linear patch projector standing in for a full image encoder:
/// splits a frame into patch_grid x patch_grid patches, flattens each, and
/// projects pixels -> d features with a fixed random matrix.
template <std::floating_point T>
class EncoderStub {
 public:
  EncoderStub(int patch_grid, int patch_dim, int d, std::uint64_t seed)
      : patch_grid_(patch_grid), patch_dim_(patch_dim), d_(d) {
    if (patch_grid < 2 || patch_dim < 1 || d < 1) {
      throw ConfigError("encoder needs patch_grid >= 2 and positive dims");
    }
    proj_ = Tensor<T>({static_cast<std::size_t>(patch_dim),
                       static_cast<std::size_t>(d)});
    Rng rng(Rng::derive(seed, 0x656E63ULL));  // "enc" stream
    const double bound = std::sqrt(6.0 / patch_dim);
    for (std::size_t i = 0; i < proj_.size(); ++i) {
      proj_[i] = static_cast<T>(rng.uniform(-bound, bound));
    }
  }

  /// Rebuilds an encoder around an existing projection matrix (checkpoints).
  EncoderStub(int patch_grid, Tensor<T> proj)
      : patch_grid_(patch_grid),
        patch_dim_(static_cast<int>(proj.dim(0))),
        d_(static_cast<int>(proj.dim(1))),
        proj_(std::move(proj)) {
    if (patch_grid < 2 || proj_.rank() != 2) {
      throw ConfigError("encoder needs patch_grid >= 2 and a rank-2 projection");
    }
  }

  int patch_grid() const { return patch_grid_; }
  int patch_dim() const { return patch_dim_; }
  int d() const { return d_; }
  std::size_t patches() const {
    return static_cast<std::size_t>(patch_grid_) * patch_grid_;
  }
  const Tensor<T>& projection() const { return proj_; }

  /// One frame -> patches x d features.
  Tensor<T> encode_frame(const std::vector<float>& pixels, int side) const {
    if (side <= 0 || side % patch_grid_ != 0) {
      throw ShapeError("frame side " + std::to_string(side) +
                       " is not a multiple of patch grid " +
                       std::to_string(patch_grid_));
    }
    const int ps = side / patch_grid_;
    if (ps * ps != patch_dim_) {
      throw ShapeError("patch has " + std::to_string(ps * ps) +
                       " pixels but encoder expects " + std::to_string(patch_dim_));
    }
    if (pixels.size() != static_cast<std::size_t>(side) * side) {
      throw ShapeError("frame pixel count " + std::to_string(pixels.size()) +
                       " does not match side " + std::to_string(side));
    }
    const std::size_t p = patches();
    Tensor<T> flat({p, static_cast<std::size_t>(patch_dim_)});
    for (int gy = 0; gy < patch_grid_; ++gy) {
      for (int gx = 0; gx < patch_grid_; ++gx) {
        T* row = flat.data() + (static_cast<std::size_t>(gy) * patch_grid_ + gx) *
                                   patch_dim_;
        for (int y = 0; y < ps; ++y) {
          for (int x = 0; x < ps; ++x) {
            row[y * ps + x] = static_cast<T>(
                pixels[static_cast<std::size_t>(gy * ps + y) * side + gx * ps + x]);
          }
        }
      }
    }
    return linear(flat, proj_, Tensor<T>({static_cast<std::size_t>(d_)}));
  }

  /// Encodes the selected native frames, keeping native index and timestamp.
  std::vector<FrameFeatures<T>> encode(const RawVideo& video,
                                       const std::vector<std::size_t>& indices) const {
    std::vector<FrameFeatures<T>> out;
    out.reserve(indices.size());
    for (const std::size_t idx : indices) {
      if (idx >= video.frames.size()) {
        throw ShapeError("frame index " + std::to_string(idx) +
                         " out of range for " + std::to_string(video.frames.size()) +
                         " frames");
      }
      FrameFeatures<T> f;
      f.z = encode_frame(video.frames[idx], video.side);
      f.frame_index = static_cast<int>(idx);
      f.timestamp_s = static_cast<float>(static_cast<double>(idx) / video.native_fps);
      out.push_back(std::move(f));
    }
    return out;
  }

 private:
  int patch_grid_;
  int patch_dim_;
  int d_;
  Tensor<T> proj_;
};

/// Splits a frame-feature sequence into ceil(n/w) windows of exactly w
/// frames; the last window is padded by repeating its final frame.
template <std::floating_point T>
std::vector<WindowBatch<T>> partition_windows(const std::vector<FrameFeatures<T>>& seq,
                                              std::size_t w) {
  if (w == 0) throw ConfigError("window size must be positive");
  if (seq.empty()) throw ConfigError("cannot window an empty feature sequence");
  const std::size_t n_windows = (seq.size() + w - 1) / w;
  std::vector<WindowBatch<T>> out(n_windows);
  for (std::size_t j = 0; j < n_windows; ++j) {
    out[j].window_index = j;
    out[j].frames.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
      const std::size_t src = j * w + t;
      out[j].frames.push_back(src < seq.size() ? seq[src] : seq.back());
    }
  }
  return out;
}

/// Writes a feature sequence as archive records frame/<k>/z plus
/// frame/<k>/meta = [native frame index, timestamp seconds].
void write_features(const std::string& path,
                    const std::vector<FrameFeatures<float>>& seq);
std::vector<FrameFeatures<float>> read_features(const std::string& path);

}  // namespace f16
