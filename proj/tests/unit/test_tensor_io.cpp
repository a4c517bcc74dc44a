// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "f16/errors.hpp"
#include "f16/io.hpp"
#include "f16/rng.hpp"
#include "f16/tensor.hpp"

using f16::Tensor32;
using f16::Tensor64;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "f16kit_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint32_t read_u32(const std::string& bytes, std::size_t offset) {
  // Little-endian reconstruction, independent of host order.
  return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 3])) << 24;
}

}  // namespace

TEST_CASE("tensor layout is row-major and size-checked") {
  Tensor64 t({2, 3}, {0, 1, 2, 3, 4, 5});
  CHECK(t(0, 0) == 0.0);
  CHECK(t(0, 2) == 2.0);
  CHECK(t(1, 0) == 3.0);
  CHECK(t(1, 2) == 5.0);

  Tensor64 cube({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(cube(1, 0, 1) == 5.0);
  CHECK(cube(0, 1, 0) == 2.0);

  CHECK_THROWS_AS(Tensor64({2, 3}, {1.0}), f16::ShapeError);
  CHECK_THROWS_AS(Tensor64({0, 3}), f16::ShapeError);
  CHECK_THROWS_AS(Tensor64(std::vector<std::size_t>{}).size(), f16::ShapeError);

  const Tensor64 flat = t.reshaped({6});
  CHECK(flat.rank() == 1);
  CHECK(flat[4] == 4.0);
  CHECK_THROWS_AS((void)t.reshaped({5}), f16::ShapeError);
}

TEST_CASE("tensor arithmetic helpers") {
  Tensor64 a({3}, {1.0, 2.0, 3.0});
  Tensor64 b({3}, {10.0, 20.0, 30.0});
  f16::add_inplace(a, b);
  CHECK(a[2] == 33.0);
  f16::axpy_inplace(a, -1.0, b);
  CHECK(a[0] == 1.0);
  f16::scale_inplace(a, 2.0);
  CHECK(a[1] == 4.0);
  CHECK(f16::max_abs_diff(a, Tensor64({3}, {2.0, 4.0, 6.0})) == 0.0);

  Tensor64 other({4});
  CHECK_THROWS_AS(f16::add_inplace(a, other), f16::ShapeError);
  CHECK_THROWS_AS((void)f16::max_abs_diff(a, other), f16::ShapeError);

  Tensor64 with_nan({2}, {1.0, 0.0});
  CHECK(with_nan.all_finite());
  with_nan[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(with_nan.all_finite());
}

TEST_CASE("rng streams are deterministic and decorrelated") {
  f16::Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  f16::Rng c(123);
  for (int i = 0; i < 100; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = c.uniform(-2.5, 7.5);
    CHECK(v >= -2.5);
    CHECK(v < 7.5);
    CHECK(c.below(17) < 17);
  }

  CHECK(f16::Rng::derive(1, 2) != f16::Rng::derive(1, 3));
  CHECK(f16::Rng::derive(1, 2) != f16::Rng::derive(2, 2));
  CHECK(f16::Rng::derive(1, 2) == f16::Rng::derive(1, 2));
}

TEST_CASE("tensor files follow the documented little-endian layout") {
  Tensor32 t({2, 3}, {1.5f, -2.25f, 0.0f, 3.0f, -0.5f, 42.0f});
  const auto path = temp_file("layout.f16t");
  {
    std::ofstream out(path, std::ios::binary);
    f16::write_tensor(out, t);
  }
  const std::string bytes = slurp(path);
  REQUIRE(bytes.size() == 4 + 4 + 4 + 2 * 4 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "F16T");
  CHECK(read_u32(bytes, 4) == 1);   // version
  CHECK(read_u32(bytes, 8) == 2);   // rank
  CHECK(read_u32(bytes, 12) == 2);  // dims
  CHECK(read_u32(bytes, 16) == 3);
  for (std::size_t i = 0; i < 6; ++i) {
    const std::uint32_t bits = read_u32(bytes, 20 + 4 * i);
    float value;
    std::memcpy(&value, &bits, sizeof value);
    CHECK(value == t[i]);
  }
}

TEST_CASE("tensor round-trip is bit-exact") {
  f16::Rng rng(55);
  Tensor32 t({3, 4, 2});
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<float>(rng.uniform(-1e3, 1e3));
  }
  t[0] = -0.0f;  // sign bit must survive

  const auto path = temp_file("roundtrip.f16t");
  {
    std::ofstream out(path, std::ios::binary);
    f16::write_tensor(out, t);
  }
  std::ifstream in(path, std::ios::binary);
  const Tensor32 back = f16::read_tensor(in);
  REQUIRE(back.dims() == t.dims());
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t wa, wb;
    std::memcpy(&wa, &t[i], 4);
    std::memcpy(&wb, &back[i], 4);
    CHECK(wa == wb);
  }
}

TEST_CASE("malformed tensor files are rejected with precise errors") {
  Tensor32 t({2, 2}, {1, 2, 3, 4});
  const auto path = temp_file("good.f16t");
  {
    std::ofstream out(path, std::ios::binary);
    f16::write_tensor(out, t);
  }
  std::string bytes = slurp(path);

  SUBCASE("bad magic") {
    bytes[0] = 'X';
    std::istringstream in(bytes);
    CHECK_THROWS_AS((void)f16::read_tensor(in), f16::FormatError);
  }
  SUBCASE("future version names the expected one") {
    bytes[4] = 2;  // little-endian low byte of the version word
    std::istringstream in(bytes);
    try {
      (void)f16::read_tensor(in);
      FAIL("expected a format error");
    } catch (const f16::FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("2") != std::string::npos);
      CHECK(msg.find("1") != std::string::npos);
    }
  }
  SUBCASE("truncated payload") {
    std::istringstream in(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS((void)f16::read_tensor(in), f16::IoError);
  }
  SUBCASE("truncated header") {
    std::istringstream in(bytes.substr(0, 6));
    CHECK_THROWS_AS((void)f16::read_tensor(in), f16::IoError);
  }
}

TEST_CASE("archive preserves record order and rejects duplicates") {
  f16::Archive archive;
  archive.add("zeta", Tensor32({1}, {1.0f}));
  archive.add("alpha", Tensor32({2}, {2.0f, 3.0f}));
  archive.add("mid", Tensor32({1, 2}, {4.0f, 5.0f}));

  CHECK(archive.size() == 3);
  CHECK(archive.records()[0].first == "zeta");
  CHECK(archive.records()[1].first == "alpha");
  CHECK(archive.records()[2].first == "mid");
  CHECK(archive.contains("mid"));
  CHECK_FALSE(archive.contains("missing"));
  CHECK(archive.get("alpha")[1] == 3.0f);

  CHECK_THROWS_AS(archive.add("alpha", Tensor32({1}, {0.0f})), f16::FormatError);
  CHECK_THROWS_AS(archive.add("", Tensor32({1}, {0.0f})), f16::FormatError);
  CHECK_THROWS_AS((void)archive.get("missing"), f16::FormatError);
}

TEST_CASE("archive files round-trip byte-stably") {
  f16::Rng rng(56);
  f16::Archive archive;
  archive.add("weights/a", Tensor32({4, 3}));
  archive.add("weights/b", Tensor32({3}));
  f16::Archive filled;
  for (const auto& [name, tensor] : archive.records()) {
    Tensor32 t = tensor;
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<float>(rng.uniform(-1, 1));
    }
    filled.add(name, t);
  }

  const auto p1 = temp_file("arch1.f16t");
  const auto p2 = temp_file("arch2.f16t");
  filled.save(p1.string());
  filled.save(p2.string());
  CHECK(slurp(p1) == slurp(p2));

  const f16::Archive back = f16::Archive::load(p1.string());
  REQUIRE(back.size() == filled.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.records()[i].first == filled.records()[i].first);
    CHECK(back.records()[i].second == filled.records()[i].second);
  }

  const auto p3 = temp_file("arch3.f16t");
  back.save(p3.string());
  CHECK(slurp(p3) == slurp(p1));
}
