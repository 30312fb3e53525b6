#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

#include "fairtab/error.hpp"

namespace fairtab {

/// Shortest text carrying 17 significant digits; round-trips every double.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto result = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, result.ptr);
}

/// Fixed two-decimal percent view of a fraction (0.1234 -> "12.34").
inline std::string format_percent(double fraction) {
  if (!std::isfinite(fraction)) return format_double(fraction);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

/// Hexadecimal float text, exact in both directions.
inline std::string format_hex(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", value);
  return buf;
}

inline double parse_double(std::string_view text, const std::string& context) {
  std::string owned(text);
  if (owned == "nan") return std::nan("");
  if (owned == "inf") return INFINITY;
  if (owned == "-inf") return -INFINITY;
  char* end = nullptr;
  const double value = std::strtod(owned.c_str(), &end);
  if (owned.empty() || end != owned.c_str() + owned.size()) {
    fail(ErrorKind::kValidation, context + ": '" + owned + "' is not a number");
  }
  return value;
}

inline long long parse_integer(std::string_view text, const std::string& context) {
  long long value = 0;
  auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    fail(ErrorKind::kValidation, context + ": '" + std::string(text) + "' is not an integer");
  }
  return value;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace fairtab
