#include "csi4/common/binary_io.hpp"

#include <vector>

namespace csi4::io {

void Writer::put(std::uint64_t v, int n) {
  char buf[8];
  for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out_.write(buf, n);
}

void Writer::f32s(std::span<const float> values) {
  std::vector<char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) buf[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::string Reader::bytes(std::size_t n) {
  std::string s(n, '\0');
  in_.read(s.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("truncated input");
  return s;
}

std::uint64_t Reader::get(int n) {
  unsigned char buf[8];
  in_.read(reinterpret_cast<char*>(buf), n);
  if (in_.gcount() != n) throw IoError("truncated input");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void Reader::f32s(std::span<float> out) {
  std::vector<unsigned char> buf(out.size() * 4);
  in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in_.gcount()) != buf.size()) throw IoError("truncated payload");
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buf[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
}

bool Reader::at_end() { return in_.peek() == std::char_traits<char>::eof(); }

}  // namespace csi4::io
