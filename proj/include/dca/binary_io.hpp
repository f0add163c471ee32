#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "dca/errors.hpp"

namespace dca::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; add byte swapping for this target");

/// Append-only little-endian encoder.
class Writer {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  template <typename T>
  void put(T v) {
    std::array<char, sizeof(T)> raw;
    std::memcpy(raw.data(), &v, sizeof(T));
    buf_.insert(buf_.end(), raw.begin(), raw.end());
  }

  void text_block(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

  const std::vector<char>& buffer() const noexcept { return buf_; }

 private:
  std::vector<char> buf_;
};

/// Bounds-checked decoder over an in-memory file image.
class Reader {
 public:
  Reader(const std::vector<char>& data, std::string what) : data_(data), what_(std::move(what)) {}

  void expect_magic(std::string_view magic) {
    if (data_.size() < magic.size() ||
        std::string_view(data_.data(), magic.size()) != magic) {
      throw BadMagicError(what_ + ": bad magic, expected \"" + std::string(magic) + "\"");
    }
    pos_ = magic.size();
  }

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string text_block() {
    const auto len = get<std::uint32_t>();
    need(len);
    std::string s(data_.data() + pos_, len);
    pos_ += len;
    return s;
  }

  /// Throws TruncatedError unless `count` items of `width` bytes remain.
  void need_items(std::uint64_t count, std::uint64_t width) const {
    const std::uint64_t left = data_.size() - pos_;
    if (width != 0 && count > left / width) {
      throw TruncatedError(what_ + ": truncated, header announces more data than the file holds");
    }
  }

  void expect_end() const {
    if (pos_ != data_.size()) {
      throw FormatError(what_ + ": " + std::to_string(data_.size() - pos_) +
                        " unexpected trailing bytes");
    }
  }

 private:
  void need(std::uint64_t n) const {
    if (data_.size() - pos_ < n) throw TruncatedError(what_ + ": truncated");
  }

  const std::vector<char>& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<char>& data);

}  // namespace dca::binary
