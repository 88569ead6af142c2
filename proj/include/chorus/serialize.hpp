#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "chorus/common.hpp"

namespace chorus {

// Little-endian binary encoding. Doubles round-trip through their bit
// pattern, so save -> load -> save is byte-identical.

class BinWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(char(v)); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void i64(int64_t v) { u64(uint64_t(v)); }
  void i32(int32_t v) { u32(uint32_t(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    buf_.append(s);
  }
  void vec_f64(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void vec_u8(std::span<const uint8_t> v) {
    u64(v.size());
    for (uint8_t x : v) u8(x);
  }
  void vec_i64(std::span<const int64_t> v) {
    u64(v.size());
    for (int64_t x : v) i64(x);
  }

  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class BinReader {
 public:
  explicit BinReader(std::string_view data) : data_(data) {}

  uint8_t u8() { return uint8_t(take(1)[0]); }
  uint32_t u32() {
    auto s = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(s[size_t(i)])) << (8 * i);
    return v;
  }
  uint64_t u64() {
    auto s = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(s[size_t(i)])) << (8 * i);
    return v;
  }
  int64_t i64() { return int64_t(u64()); }
  int32_t i32() { return int32_t(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const uint64_t n = u64();
    auto s = take(n);
    return std::string(s);
  }
  std::vector<double> vec_f64() {
    const uint64_t n = u64();
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::vector<uint8_t> vec_u8() {
    const uint64_t n = u64();
    std::vector<uint8_t> v(n);
    for (auto& x : v) x = u8();
    return v;
  }
  std::vector<int64_t> vec_i64() {
    const uint64_t n = u64();
    std::vector<int64_t> v(n);
    for (auto& x : v) x = i64();
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string_view take(uint64_t n) {
    if (pos_ + n > data_.size()) throw io_error("snapshot truncated");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string_view data_;
  size_t pos_ = 0;
};

inline void write_file_atomic(const std::string& path, const std::string& data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + tmp);
    out.write(data.data(), std::streamsize(data.size()));
    if (!out) throw io_error("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw io_error("cannot rename " + tmp + " to " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

}  // namespace chorus
