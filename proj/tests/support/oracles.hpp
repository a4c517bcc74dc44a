// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Independent reference implementations used only by the tests. Each one
// recomputes a quantity the library also computes, via a different algorithm
// (quadrature instead of erf, descending-sum loops, max_element scans,
// image-space centroids), so agreement is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "f16/features.hpp"
#include "f16/rng.hpp"
#include "f16/tensor.hpp"

namespace oracles {

/// Standard normal CDF by Simpson quadrature of the density over [0, x]
/// (plus 1/2), no erf anywhere. Panel width ~1e-3 keeps the error far
/// below 1e-9 on |x| <= 8.
inline double quad_normal_cdf(double x) {
  const double ax = std::abs(x);
  const int panels = std::max(64, static_cast<int>(ax * 1000.0)) * 2;
  const double step = ax / panels;
  auto density = [](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  };
  double sum = density(0.0) + density(ax);
  for (int i = 1; i < panels; ++i) {
    sum += density(i * step) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  const double integral = sum * step / 3.0;
  return x >= 0.0 ? 0.5 + integral : 0.5 - integral;
}

/// Dense affine map recomputed with reversed accumulation order and long
/// double accumulators.
template <std::floating_point T>
f16::Tensor<T> naive_linear(const f16::Tensor<T>& x, const f16::Tensor<T>& w,
                            const f16::Tensor<T>& b) {
  const std::size_t n = x.dim(0), a = x.dim(1), out = w.dim(1);
  f16::Tensor<T> y({n, out});
  for (std::size_t j = 0; j < out; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      long double acc = b[j];
      for (std::size_t k = a; k-- > 0;) {
        acc += static_cast<long double>(x(i, k)) * static_cast<long double>(w(k, j));
      }
      y(i, j) = static_cast<T>(acc);
    }
  }
  return y;
}

/// 2x2 block max by explicit gather + std::max_element.
template <std::floating_point T>
f16::Tensor<T> naive_max_pool(const f16::Tensor<T>& grid) {
  const std::size_t g = grid.dim(0), h = grid.dim(2), half = g / 2;
  f16::Tensor<T> out({half, half, h});
  for (std::size_t bi = 0; bi < half; ++bi) {
    for (std::size_t bj = 0; bj < half; ++bj) {
      for (std::size_t c = 0; c < h; ++c) {
        const T cell[4] = {grid(2 * bi, 2 * bj, c), grid(2 * bi, 2 * bj + 1, c),
                           grid(2 * bi + 1, 2 * bj, c), grid(2 * bi + 1, 2 * bj + 1, c)};
        out(bi, bj, c) = *std::max_element(cell, cell + 4);
      }
    }
  }
  return out;
}

/// Intensity-weighted centroid angle of one grayscale frame, measured from
/// the image center. Screen y grows downward; using raw row coordinates
/// keeps the convention consistent across frames, which is all the angular
/// *step* tests need.
inline double centroid_angle(const std::vector<float>& pixels, int side) {
  double mass = 0.0, mx = 0.0, my = 0.0;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double v = pixels[static_cast<std::size_t>(y) * side + x];
      mass += v;
      mx += v * x;
      my += v * y;
    }
  }
  const double center = (side - 1) / 2.0;
  return std::atan2(my / mass - center, mx / mass - center);
}

/// Wraps an angle difference into (-pi, pi].
inline double wrap_angle(double delta) {
  while (delta <= -std::numbers::pi) delta += 2.0 * std::numbers::pi;
  while (delta > std::numbers::pi) delta -= 2.0 * std::numbers::pi;
  return delta;
}

/// Sign of the apparent per-sample rotation of a video restricted to the
/// given frame indices: +1 when centroid angles consistently advance, -1
/// when they consistently recede, 0 on mixed evidence.
inline int apparent_rotation_sign(const f16::RawVideo& video,
                                  const std::vector<std::size_t>& indices) {
  int pos = 0, neg = 0;
  for (std::size_t i = 1; i < indices.size(); ++i) {
    const double a0 = centroid_angle(video.frames[indices[i - 1]], video.side);
    const double a1 = centroid_angle(video.frames[indices[i]], video.side);
    const double step = wrap_angle(a1 - a0);
    if (step > 0) ++pos;
    if (step < 0) ++neg;
  }
  if (pos > 0 && neg == 0) return 1;
  if (neg > 0 && pos == 0) return -1;
  return 0;
}

/// Random frame features with entries uniform on [lo, hi).
template <std::floating_point T>
f16::FrameFeatures<T> random_frame(std::size_t p, std::size_t d, f16::Rng& rng,
                                   double lo, double hi, int frame_index = 0) {
  f16::FrameFeatures<T> f;
  f.z = f16::Tensor<T>({p, d});
  for (std::size_t i = 0; i < f.z.size(); ++i) {
    f.z[i] = static_cast<T>(rng.uniform(lo, hi));
  }
  f.frame_index = frame_index;
  f.timestamp_s = static_cast<float>(frame_index) / 16.0f;
  return f;
}

template <std::floating_point T>
std::vector<f16::FrameFeatures<T>> random_sequence(std::size_t n, std::size_t p,
                                                   std::size_t d, f16::Rng& rng,
                                                   double lo = -1.0,
                                                   double hi = 1.0) {
  std::vector<f16::FrameFeatures<T>> seq;
  seq.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    seq.push_back(random_frame<T>(p, d, rng, lo, hi, static_cast<int>(i)));
  }
  return seq;
}

/// n copies of one frame, reindexed 0..n-1.
template <std::floating_point T>
std::vector<f16::FrameFeatures<T>> constant_sequence(std::size_t n,
                                                     const f16::FrameFeatures<T>& f) {
  std::vector<f16::FrameFeatures<T>> seq(n, f);
  for (std::size_t i = 0; i < n; ++i) seq[i].frame_index = static_cast<int>(i);
  return seq;
}

template <std::floating_point T>
f16::WindowBatch<T> make_window(std::vector<f16::FrameFeatures<T>> frames,
                                std::size_t index = 0) {
  f16::WindowBatch<T> win;
  win.frames = std::move(frames);
  win.window_index = index;
  return win;
}

/// Elementwise mean of equally shaped matrices, long double accumulation.
template <std::floating_point T>
f16::Tensor<T> mean_of(const std::vector<f16::Tensor<T>>& tensors) {
  f16::Tensor<T> out(tensors.front().dims());
  for (std::size_t i = 0; i < out.size(); ++i) {
    long double acc = 0.0L;
    for (const auto& t : tensors) acc += t[i];
    out[i] = static_cast<T>(acc / tensors.size());
  }
  return out;
}

}  // namespace oracles
