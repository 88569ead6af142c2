#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace chorus {

inline constexpr const char* kVersion = "0.1.0";

// A caller broke a documented precondition.
struct contract_violation : std::logic_error {
  using std::logic_error::logic_error;
};

// Text input failure with 1-based line/column location.
struct parse_error : std::runtime_error {
  int line;
  int col;
  parse_error(const std::string& msg, int line_, int col_)
      : std::runtime_error("line " + std::to_string(line_) + ", col " +
                           std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
};

// Config file failure, line-precise.
struct config_error : std::runtime_error {
  int line;
  config_error(const std::string& msg, int line_ = 0)
      : std::runtime_error(line_ > 0 ? "config line " + std::to_string(line_) +
                                           ": " + msg
                                     : "config: " + msg),
        line(line_) {}
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal form, locale-free. Used for every number
// that lands in a log so reruns are byte-comparable.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_int(int64_t x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace chorus
