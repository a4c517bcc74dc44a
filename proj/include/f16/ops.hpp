// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "f16/errors.hpp"
#include "f16/tensor.hpp"

namespace f16 {

// All kernels are pure and use a fixed reduction order (ascending inner
// index per output element), so identical inputs give bit-identical outputs
// regardless of thread count at the call site.

/// y[i,j] = sum_k x[i,k] * w[k,j] + b[j], summed in ascending k.
template <std::floating_point T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1) {
    throw ShapeError("linear expects x rank-2, w rank-2, b rank-1; got " +
                     dims_to_string(x.dims()) + ", " + dims_to_string(w.dims()) +
                     ", " + dims_to_string(b.dims()));
  }
  const std::size_t n = x.dim(0), a = x.dim(1), out_dim = w.dim(1);
  if (w.dim(0) != a) {
    throw ShapeError("linear inner dims disagree: x is " + dims_to_string(x.dims()) +
                     ", w is " + dims_to_string(w.dims()));
  }
  if (b.dim(0) != out_dim) {
    throw ShapeError("linear bias dim " + std::to_string(b.dim(0)) +
                     " does not match w columns " + std::to_string(out_dim));
  }
  Tensor<T> out({n, out_dim});
  for (std::size_t i = 0; i < n; ++i) {
    T* orow = out.data() + i * out_dim;
    const T* xrow = x.data() + i * a;
    for (std::size_t k = 0; k < a; ++k) {
      const T xv = xrow[k];
      const T* wrow = w.data() + k * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) orow[j] += xv * wrow[j];
    }
    for (std::size_t j = 0; j < out_dim; ++j) orow[j] += b[j];
  }
  return out;
}

template <std::floating_point T>
struct LinearGrads {
  Tensor<T> dx;
  Tensor<T> dw;
  Tensor<T> db;
};

/// Analytic backward of linear(): dx = g w^T, dw = x^T g, db = colsum(g).
template <std::floating_point T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w,
                               const Tensor<T>& upstream) {
  const std::size_t n = x.dim(0), a = x.dim(1), out_dim = w.dim(1);
  if (upstream.rank() != 2 || upstream.dim(0) != n || upstream.dim(1) != out_dim) {
    throw ShapeError("linear_backward upstream " + dims_to_string(upstream.dims()) +
                     " does not match output " + std::to_string(n) + "x" +
                     std::to_string(out_dim));
  }
  LinearGrads<T> g{Tensor<T>({n, a}), Tensor<T>({a, out_dim}), Tensor<T>({out_dim})};
  for (std::size_t i = 0; i < n; ++i) {
    const T* grow = upstream.data() + i * out_dim;
    T* dxrow = g.dx.data() + i * a;
    for (std::size_t k = 0; k < a; ++k) {
      const T* wrow = w.data() + k * out_dim;
      T acc = 0;
      for (std::size_t j = 0; j < out_dim; ++j) acc += grow[j] * wrow[j];
      dxrow[k] = acc;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {  // ascending i per (k,j) cell
    const T* xrow = x.data() + i * a;
    const T* grow = upstream.data() + i * out_dim;
    for (std::size_t k = 0; k < a; ++k) {
      const T xv = xrow[k];
      T* dwrow = g.dw.data() + k * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) dwrow[j] += xv * grow[j];
    }
    for (std::size_t j = 0; j < out_dim; ++j) g.db[j] += grow[j];
  }
  return g;
}

namespace detail {

template <std::floating_point T>
inline T normal_cdf(T x) {
  return T(0.5) * (T(1) + std::erf(x * T(0.70710678118654752440)));
}

template <std::floating_point T>
inline T normal_pdf(T x) {
  return T(0.39894228040143267794) * std::exp(T(-0.5) * x * x);
}

}  // namespace detail

/// Exact GELU, y = x * Phi(x) with Phi the standard normal CDF (erf form,
/// not the tanh approximation).
template <std::floating_point T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * detail::normal_cdf(x[i]);
  return out;
}

/// dy/dx = Phi(x) + x * phi(x), elementwise against upstream.
template <std::floating_point T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& upstream) {
  if (!x.same_dims(upstream)) {
    throw ShapeError("gelu_backward dims " + dims_to_string(x.dims()) + " vs " +
                     dims_to_string(upstream.dims()));
  }
  Tensor<T> out(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = upstream[i] * (detail::normal_cdf(x[i]) + x[i] * detail::normal_pdf(x[i]));
  }
  return out;
}

/// Spatial 2x2 max pool over a g x g x h grid, disjoint blocks, channels
/// independent. Odd trailing row/column is dropped (output side floor(g/2)).
template <std::floating_point T>
Tensor<T> max_pool_2x2(const Tensor<T>& grid) {
  if (grid.rank() != 3) {
    throw ShapeError("max_pool_2x2 expects rank-3 grid, got " +
                     dims_to_string(grid.dims()));
  }
  const std::size_t g = grid.dim(0), h = grid.dim(2);
  if (grid.dim(1) != g || g < 2) {
    throw ShapeError("max_pool_2x2 needs a square grid with side >= 2, got " +
                     dims_to_string(grid.dims()));
  }
  const std::size_t half = g / 2;
  Tensor<T> out({half, half, h});
  for (std::size_t bi = 0; bi < half; ++bi) {
    for (std::size_t bj = 0; bj < half; ++bj) {
      for (std::size_t c = 0; c < h; ++c) {
        T best = grid(2 * bi, 2 * bj, c);
        for (std::size_t s = 1; s < 4; ++s) {
          const T v = grid(2 * bi + s / 2, 2 * bj + s % 2, c);
          if (v > best) best = v;  // strict: ties keep the earliest cell
        }
        out(bi, bj, c) = best;
      }
    }
  }
  return out;
}

/// Routes each output-cell gradient to the argmax cell of its source block;
/// ties go to the first maximal cell in row-major block order.
template <std::floating_point T>
Tensor<T> max_pool_2x2_backward(const Tensor<T>& grid, const Tensor<T>& upstream) {
  const std::size_t g = grid.dim(0), h = grid.dim(2), half = g / 2;
  if (upstream.rank() != 3 || upstream.dim(0) != half || upstream.dim(1) != half ||
      upstream.dim(2) != h) {
    throw ShapeError("max_pool_2x2_backward upstream " +
                     dims_to_string(upstream.dims()) + " does not match pooled " +
                     std::to_string(half) + "x" + std::to_string(half) + "x" +
                     std::to_string(h));
  }
  Tensor<T> out(grid.dims());
  for (std::size_t bi = 0; bi < half; ++bi) {
    for (std::size_t bj = 0; bj < half; ++bj) {
      for (std::size_t c = 0; c < h; ++c) {
        std::size_t arg = 0;
        T best = grid(2 * bi, 2 * bj, c);
        for (std::size_t s = 1; s < 4; ++s) {
          const T v = grid(2 * bi + s / 2, 2 * bj + s % 2, c);
          if (v > best) {
            best = v;
            arg = s;
          }
        }
        out(2 * bi + arg / 2, 2 * bj + arg % 2, c) += upstream(bi, bj, c);
      }
    }
  }
  return out;
}

/// Side length of the square patch grid for p patches; rejects non-squares.
inline std::size_t grid_side(std::size_t patches) {
  if (patches == 0) throw ShapeError("patch count must be positive");
  std::size_t s = static_cast<std::size_t>(std::sqrt(static_cast<double>(patches)));
  while (s * s < patches) ++s;
  while (s > 0 && s * s > patches) --s;
  if (s * s != patches) {
    throw ShapeError("patch count " + std::to_string(patches) +
                     " is not a perfect square");
  }
  return s;
}

/// Reshape p x c rows onto their sqrt(p) x sqrt(p) grid, 2x2 max pool, and
/// flatten back to m x c. Used for token pooling and for pre-pool variants.
template <std::floating_point T>
Tensor<T> pool_rows(const Tensor<T>& rows) {
  if (rows.rank() != 2) {
    throw ShapeError("pool_rows expects a rank-2 matrix, got " +
                     dims_to_string(rows.dims()));
  }
  const std::size_t side = grid_side(rows.dim(0));
  const std::size_t c = rows.dim(1);
  Tensor<T> pooled = max_pool_2x2(rows.reshaped({side, side, c}));
  const std::size_t m = pooled.dim(0) * pooled.dim(1);
  return pooled.reshaped({m, c});
}

/// Concatenates p x d_i matrices along the feature (column) dimension in
/// list order.
template <std::floating_point T>
Tensor<T> concat_feature_dim(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_feature_dim: empty part list");
  const std::size_t rows = parts.front().dim(0);
  std::size_t total = 0;
  for (const auto& part : parts) {
    if (part.rank() != 2 || part.dim(0) != rows) {
      throw ShapeError("concat_feature_dim row mismatch: expected " +
                       std::to_string(rows) + " rows, got " +
                       dims_to_string(part.dims()));
    }
    total += part.dim(1);
  }
  Tensor<T> out({rows, total});
  for (std::size_t i = 0; i < rows; ++i) {
    T* orow = out.data() + i * total;
    std::size_t col = 0;
    for (const auto& part : parts) {
      const std::size_t d = part.dim(1);
      const T* prow = part.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) orow[col + j] = prow[j];
      col += d;
    }
  }
  return out;
}

/// Central-difference gradient of a scalar function, (f(x+se)-f(x-se))/(2s)
/// per element, always in 64-bit. The verification oracle for every backward
/// pass in this library.
template <typename F>
  requires std::invocable<F, const Tensor64&>
Tensor64 finite_difference_gradient(F&& f, const Tensor64& x, double step) {
  if (step <= 0) throw OracleError("finite difference step must be positive");
  Tensor64 grad(x.dims());
  Tensor64 probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + step;
    const double fp = f(static_cast<const Tensor64&>(probe));
    probe[i] = saved - step;
    const double fm = f(static_cast<const Tensor64&>(probe));
    probe[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw OracleError("finite_difference_gradient: non-finite value at element " +
                        std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

}  // namespace f16
