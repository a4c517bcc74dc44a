// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "f16/tensor.hpp"

namespace f16 {

// Binary tensor container, always little-endian on disk regardless of host:
//   magic "F16T" | version u32 (=1) | rank u32 | dims rank*u32 | f32 payload
// Payload is row-major IEEE-754 binary32. An archive file is a plain
// concatenation of named records, each: name-length u32 | UTF-8 name | tensor.

inline constexpr char kTensorMagic[4] = {'F', '1', '6', 'T'};
inline constexpr std::uint32_t kTensorVersion = 1;

void write_tensor(std::ostream& out, const Tensor32& tensor);
Tensor32 read_tensor(std::istream& in);

/// Ordered collection of named float tensors with file round-trip. Record
/// order is preserved so saved files are byte-stable across runs.
class Archive {
 public:
  void add(const std::string& name, Tensor32 tensor);
  bool contains(const std::string& name) const;
  const Tensor32& get(const std::string& name) const;
  std::size_t size() const { return records_.size(); }
  const std::vector<std::pair<std::string, Tensor32>>& records() const {
    return records_;
  }

  void save(const std::string& path) const;
  static Archive load(const std::string& path);

 private:
  std::vector<std::pair<std::string, Tensor32>> records_;
};

}  // namespace f16
