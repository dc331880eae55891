#pragma once

#include <charconv>
#include <string>

namespace clare {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_number(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return {buf, res.ptr};
}

/// Fixed-point text with `digits` decimals.
inline std::string format_fixed(double value, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, digits);
  return {buf, res.ptr};
}

}  // namespace clare
