// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace f16 {

/// Dimension or rank disagreement between tensors.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration (rates, window factors, dataset speeds).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content (bad magic, wrong version, unexpected record).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Underlying stream failure (open, truncation, short read/write).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite-difference oracle hit a non-finite function value.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training diverged or was otherwise unable to proceed.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace f16
