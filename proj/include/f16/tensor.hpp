// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "f16/errors.hpp"

namespace f16 {

inline std::string dims_to_string(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s.empty() ? "scalar" : s;
}

// Dense row-major tensor of rank 1-3. float is the storage type used by the
// pipeline and the file format; double instantiations exist for verification
// (gradient checks, tightened invariants).
template <std::floating_point T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims)
      : dims_(std::move(dims)), data_(checked_count(dims_), T(0)) {}

  Tensor(std::vector<std::size_t> dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (checked_count(dims_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match dims " + dims_to_string(dims_));
    }
  }

  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_[i]; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  T& operator()(std::size_t i) { return data_[i]; }
  const T& operator()(std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * dims_[1] + j];
  }

  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  /// Same data, new dims; element count must be unchanged.
  Tensor reshaped(std::vector<std::size_t> new_dims) const {
    Tensor out(std::move(new_dims), data_);
    return out;
  }

  template <std::floating_point U>
  Tensor<U> cast() const {
    std::vector<U> d(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) d[i] = static_cast<U>(data_[i]);
    return Tensor<U>(dims_, std::move(d));
  }

  bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  static std::size_t checked_count(const std::vector<std::size_t>& dims) {
    if (dims.empty() || dims.size() > 3) {
      throw ShapeError("tensor rank must be 1-3, got rank " +
                       std::to_string(dims.size()));
    }
    std::size_t n = 1;
    for (std::size_t d : dims) {
      if (d == 0) throw ShapeError("zero-sized dimension in " + dims_to_string(dims));
      n *= d;
    }
    return n;
  }

  std::vector<std::size_t> dims_;
  std::vector<T> data_;
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

/// Exact elementwise equality (bit-level for finite values) plus dims.
template <std::floating_point T>
bool operator==(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_dims(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

template <std::floating_point T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  if (!dst.same_dims(src)) {
    throw ShapeError("add_inplace dims " + dims_to_string(dst.dims()) + " vs " +
                     dims_to_string(src.dims()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

/// dst += a * src
template <std::floating_point T>
void axpy_inplace(Tensor<T>& dst, T a, const Tensor<T>& src) {
  if (!dst.same_dims(src)) {
    throw ShapeError("axpy_inplace dims " + dims_to_string(dst.dims()) + " vs " +
                     dims_to_string(src.dims()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += a * src[i];
}

template <std::floating_point T>
void scale_inplace(Tensor<T>& dst, T a) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= a;
}

template <std::floating_point T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_dims(b)) {
    throw ShapeError("max_abs_diff dims " + dims_to_string(a.dims()) + " vs " +
                     dims_to_string(b.dims()));
  }
  T m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    T d = std::abs(a[i] - b[i]);
    if (d > m) m = d;
  }
  return m;
}

/// Trainable value with its accumulated gradient.
template <std::floating_point T>
struct GradPair {
  Tensor<T> value;
  Tensor<T> grad;

  explicit GradPair(Tensor<T> v) : value(std::move(v)), grad(value.dims()) {}

  void zero_grad() {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = T(0);
  }

  void sgd_step(T learning_rate) { axpy_inplace(value, -learning_rate, grad); }
};

}  // namespace f16
