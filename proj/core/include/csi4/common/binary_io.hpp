#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "csi4/common/errors.hpp"

namespace csi4::io {

// Little-endian primitives, independent of host byte order.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(std::string_view b) { out_.write(b.data(), static_cast<std::streamsize>(b.size())); }
  void u8(std::uint8_t v) { put(v, 1); }
  void u16(std::uint16_t v) { put(v, 2); }
  void i16(std::int16_t v) { put(static_cast<std::uint16_t>(v), 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void f32s(std::span<const float> values);

 private:
  void put(std::uint64_t v, int n);
  std::ostream& out_;
};

// Reader that reports short reads as IoError ("truncated").
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string bytes(std::size_t n);
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::int16_t i16() { return static_cast<std::int16_t>(static_cast<std::uint16_t>(get(2))); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
  void f32s(std::span<float> out);
  bool at_end();

 private:
  std::uint64_t get(int n);
  std::istream& in_;
};

}  // namespace csi4::io
