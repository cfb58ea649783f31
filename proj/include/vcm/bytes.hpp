#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "vcm/result.hpp"

namespace vcm {

using Bytes = std::vector<std::uint8_t>;

// Big-endian serializer. All wire formats in this library go through it.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }

  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }

  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }

  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }

  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  // u32 length prefix followed by the bytes.
  void var_bytes(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }

  const Bytes& bytes() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Big-endian reader over a fixed buffer. Overruns set a sticky failure flag
// and return zeros; callers check ok()/done() once at the end.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    if (!need(1)) return 0;
    return in_[pos_++];
  }

  std::uint16_t u16() {
    if (!need(2)) return 0;
    std::uint16_t v = (std::uint16_t(in_[pos_]) << 8) | in_[pos_ + 1];
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    if (!need(4)) return 0;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    if (!need(8)) return 0;
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += 8;
    return v;
  }

  Bytes raw(std::size_t n) {
    if (!need(n)) return {};
    Bytes b(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return b;
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> raw_array() {
    std::array<std::uint8_t, N> a{};
    if (!need(N)) return a;
    std::memcpy(a.data(), in_.data() + pos_, N);
    pos_ += N;
    return a;
  }

  Bytes var_bytes() {
    std::uint32_t n = u32();
    return raw(n);
  }

  bool ok() const { return !failed_; }
  bool done() const { return !failed_ && pos_ == in_.size(); }
  std::size_t remaining() const { return failed_ ? 0 : in_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  bool need(std::size_t n) {
    if (failed_ || in_.size() - pos_ < n) {
      failed_ = true;
      return false;
    }
    return true;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  bool failed_ = false;
};

inline std::string to_hex(std::span<const std::uint8_t> b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (std::uint8_t c : b) {
    s.push_back(digits[c >> 4]);
    s.push_back(digits[c & 0xf]);
  }
  return s;
}

// Rejects odd length and non-hex characters; the error detail carries the
// offset of the first bad input byte.
inline Result<Bytes> from_hex(std::string_view s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(s.size() / 2);
  for (std::size_t i = 0; i < s.size(); i += 2) {
    int hi = nibble(s[i]);
    if (hi < 0) return err(Errc::malformed, "bad hex at offset " + std::to_string(i));
    if (i + 1 >= s.size()) return err(Errc::malformed, "odd hex length, trailing nibble at offset " + std::to_string(i));
    int lo = nibble(s[i + 1]);
    if (lo < 0) return err(Errc::malformed, "bad hex at offset " + std::to_string(i + 1));
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

}  // namespace vcm
