#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vgka/error.hpp"

namespace vgka {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

inline std::string to_hex(ByteView b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (auto c : b) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

inline Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(Errc::Decode, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::Decode, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

inline void append(Bytes& dst, ByteView src) { dst.insert(dst.end(), src.begin(), src.end()); }

/// Big-endian append-only encoder.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
  }
  ByteWriter& u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
  }
  ByteWriter& u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
  }
  ByteWriter& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  ByteWriter& raw(ByteView v) {
    append(buf_, v);
    return *this;
  }
  /// 4-byte big-endian length prefix followed by the bytes.
  ByteWriter& var(ByteView v) {
    u32(static_cast<std::uint32_t>(v.size()));
    return raw(v);
  }

  const Bytes& bytes() const& { return buf_; }
  Bytes bytes() && { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  Bytes buf_;
};

/// Bounds-checked big-endian decoder; every overrun throws Errc::Decode.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}
  explicit ByteReader(Bytes&&) = delete;  // would dangle

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (auto c : s) v = (v << 8) | c;
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (auto c : s) v = (v << 8) | c;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  ByteView raw(std::size_t n) { return take(n); }
  template <std::size_t N>
  std::array<std::uint8_t, N> fixed() {
    auto s = take(N);
    std::array<std::uint8_t, N> out{};
    std::copy(s.begin(), s.end(), out.begin());
    return out;
  }
  Bytes var() {
    auto n = u32();
    auto s = take(n);
    return Bytes(s.begin(), s.end());
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void expect_end() const {
    if (remaining() != 0) throw Error(Errc::Decode, std::to_string(remaining()) + " trailing bytes");
  }

 private:
  ByteView take(std::size_t n) {
    if (n > remaining()) throw Error(Errc::Decode, "truncated input");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace vgka
