// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "f16/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "f16/errors.hpp"

namespace f16 {
namespace {

static_assert(std::numeric_limits<float>::is_iec559, "requires IEEE-754 floats");

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xFF),
                            static_cast<unsigned char>((v >> 8) & 0xFF),
                            static_cast<unsigned char>((v >> 16) & 0xFF),
                            static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw IoError("unexpected end of file while reading a 4-byte field");
  }
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void put_f32(std::ostream& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

}  // namespace

void write_tensor(std::ostream& out, const Tensor32& tensor) {
  out.write(kTensorMagic, 4);
  put_u32(out, kTensorVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (std::size_t i = 0; i < tensor.rank(); ++i) {
    put_u32(out, static_cast<std::uint32_t>(tensor.dim(i)));
  }
  for (std::size_t i = 0; i < tensor.size(); ++i) put_f32(out, tensor[i]);
  if (!out) throw IoError("write failed while serializing a tensor");
}

Tensor32 read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw IoError("unexpected end of file before tensor magic");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw FormatError("bad magic: not a tensor record");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kTensorVersion) {
    throw FormatError("unsupported version " + std::to_string(version) +
                      ", expected " + std::to_string(kTensorVersion));
  }
  const std::uint32_t rank = get_u32(in);
  if (rank < 1 || rank > 3) {
    throw FormatError("tensor rank " + std::to_string(rank) + " out of range 1..3");
  }
  std::vector<std::size_t> dims(rank);
  std::size_t count = 1;
  for (auto& d : dims) {
    d = get_u32(in);
    if (d == 0) throw FormatError("tensor has a zero dimension");
    count *= d;
  }
  std::vector<float> payload(count);
  for (auto& v : payload) v = get_f32(in);
  return Tensor32(dims, payload);
}

void Archive::add(const std::string& name, Tensor32 tensor) {
  if (name.empty()) throw FormatError("archive record name must not be empty");
  if (contains(name)) throw FormatError("duplicate archive record: " + name);
  records_.emplace_back(name, std::move(tensor));
}

bool Archive::contains(const std::string& name) const {
  for (const auto& [key, value] : records_) {
    if (key == name) return true;
  }
  return false;
}

const Tensor32& Archive::get(const std::string& name) const {
  for (const auto& [key, value] : records_) {
    if (key == name) return value;
  }
  throw FormatError("archive record not found: " + name);
}

void Archive::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& [name, tensor] : records_) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, tensor);
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

Archive Archive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  Archive archive;
  while (true) {
    if (in.peek() == std::char_traits<char>::eof()) break;
    const std::uint32_t name_len = get_u32(in);
    if (name_len == 0 || name_len > 4096) {
      throw FormatError("archive record name length " + std::to_string(name_len) +
                        " out of range");
    }
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw IoError("unexpected end of file inside a record name");
    }
    archive.add(name, read_tensor(in));
  }
  return archive;
}

}  // namespace f16
