#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "park/errors.hpp"

namespace park::binary {

/// Appends little-endian scalars to a byte string.
class Writer {
 public:
  void magic(std::string_view m) { buf_.append(m); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t k = 0; k < sizeof(U); ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  std::string buf_;
};

/// Reads what Writer wrote; truncated input raises InputError.
class Reader {
 public:
  explicit Reader(std::string_view bytes) : data_(bytes) {}

  void expect_magic(std::string_view m) {
    need(m.size());
    if (data_.substr(pos_, m.size()) != m)
      throw InputError("binary artifact: bad magic, expected '" + std::string(m) + "'");
    pos_ += m.size();
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  std::string str() {
    const std::uint64_t len = u64();
    need(len);
    std::string s(data_.substr(pos_, len));
    pos_ += len;
    return s;
  }
  /// Upper bound check for element counts read from the stream.
  std::uint64_t count(std::uint64_t element_bytes) {
    const std::uint64_t c = u64();
    if (element_bytes > 0 && c > remaining() / element_bytes)
      throw InputError("binary artifact: element count exceeds file size");
    return c;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t k) const {
    if (data_.size() - pos_ < k) throw InputError("binary artifact: unexpected end of data");
  }
  template <typename U>
  U get_le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k)
      v |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    pos_ += sizeof(U);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace park::binary
