// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "f16/features.hpp"

#include <cmath>
#include <numbers>

#include "f16/io.hpp"

namespace f16 {

std::vector<std::size_t> sample_frame_indices(std::size_t total_frames,
                                              int native_fps, int target_fps,
                                              std::size_t max_frames) {
  if (total_frames == 0) throw ConfigError("video has no frames to sample");
  if (native_fps <= 0 || target_fps <= 0) {
    throw ConfigError("unsupported rate: frame rates must be positive");
  }
  if (target_fps > native_fps) {
    throw ConfigError("unsupported rate: target " + std::to_string(target_fps) +
                      " fps exceeds native " + std::to_string(native_fps) + " fps");
  }
  if (max_frames == 0) throw ConfigError("frame cap must be positive");

  std::vector<std::size_t> indices;
  const long long wanted = static_cast<long long>(total_frames) * target_fps;
  const long long allowed = static_cast<long long>(max_frames) * native_fps;
  if (wanted <= allowed) {
    // Below the cap: one frame per 1/target_fps seconds of clip.
    const std::size_t n = std::max<std::size_t>(
        1, total_frames * static_cast<std::size_t>(target_fps) /
               static_cast<std::size_t>(native_fps));
    indices.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
      auto idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(t) * native_fps / target_fps));
      if (idx >= total_frames) idx = total_frames - 1;
      indices.push_back(idx);
    }
  } else {
    // Over the cap: exactly max_frames indices, evenly spread.
    indices.reserve(max_frames);
    for (std::size_t i = 0; i < max_frames; ++i) {
      indices.push_back(i * total_frames / max_frames);
    }
  }
  return indices;
}

RawVideo generate_rotating_dot(std::uint64_t seed, double revs_per_s, int direction,
                               double duration_s, int native_fps, int side) {
  if (direction != 1 && direction != -1) {
    throw ConfigError("direction must be +1 (counter-clockwise) or -1 (clockwise)");
  }
  if (revs_per_s < 0.0) throw ConfigError("rotation speed must be non-negative");
  if (duration_s <= 0.0) throw ConfigError("duration must be positive");
  if (native_fps < 16) throw ConfigError("native fps must be at least 16");
  if (side < 16) throw ConfigError("frame side must be at least 16 pixels");

  const auto n_frames =
      static_cast<std::size_t>(std::llround(native_fps * duration_s));
  if (n_frames == 0) throw ConfigError("duration too short for one frame");

  RawVideo video;
  video.side = side;
  video.native_fps = native_fps;
  video.duration_s = duration_s;
  video.frames.reserve(n_frames);

  Rng rng(seed);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double sigma = side / 16.0;
  const double radius = side / 4.0;
  const double center = (side - 1) / 2.0;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

  for (std::size_t t = 0; t < n_frames; ++t) {
    const double time = static_cast<double>(t) / native_fps;
    const double theta =
        phase + direction * 2.0 * std::numbers::pi * revs_per_s * time;
    const double dot_x = center + radius * std::cos(theta);
    const double dot_y = center + radius * std::sin(theta);
    std::vector<float> frame(static_cast<std::size_t>(side) * side);
    for (int y = 0; y < side; ++y) {
      const double dy = y - dot_y;
      for (int x = 0; x < side; ++x) {
        const double dx = x - dot_x;
        frame[static_cast<std::size_t>(y) * side + x] =
            static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv_two_sigma_sq));
      }
    }
    video.frames.push_back(std::move(frame));
  }
  return video;
}

void write_features(const std::string& path,
                    const std::vector<FrameFeatures<float>>& seq) {
  if (seq.empty()) throw FormatError("refusing to write an empty feature sequence");
  Archive archive;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const std::string prefix = "frame/" + std::to_string(k) + "/";
    archive.add(prefix + "z", seq[k].z);
    archive.add(prefix + "meta",
                Tensor32({2}, {static_cast<float>(seq[k].frame_index),
                               seq[k].timestamp_s}));
  }
  archive.save(path);
}

std::vector<FrameFeatures<float>> read_features(const std::string& path) {
  const Archive archive = Archive::load(path);
  std::vector<FrameFeatures<float>> seq;
  for (std::size_t k = 0;; ++k) {
    const std::string prefix = "frame/" + std::to_string(k) + "/";
    if (!archive.contains(prefix + "z")) break;
    const Tensor32& meta = archive.get(prefix + "meta");
    if (meta.rank() != 1 || meta.dim(0) != 2) {
      throw FormatError("frame meta record must hold [frame_index, timestamp]");
    }
    FrameFeatures<float> f;
    f.z = archive.get(prefix + "z");
    if (f.z.rank() != 2) {
      throw FormatError("frame feature record must be rank-2 (patches x d)");
    }
    f.frame_index = static_cast<int>(meta[0]);
    f.timestamp_s = meta[1];
    seq.push_back(std::move(f));
  }
  if (seq.empty()) throw FormatError("no frame records found in " + path);
  if (archive.size() != seq.size() * 2) {
    throw FormatError("unexpected extra records in feature file " + path);
  }
  return seq;
}

}  // namespace f16
