#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>

#include "core/errors.hpp"

namespace gmis {

// Shortest round-trip decimal representation, locale independent.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericError("format_double failed");
  return std::string(buf, ptr);
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParamError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParamError("cannot open for reading: " + path);
  return in;
}

// RFC 4180 line terminator.
inline constexpr const char* kCsvEol = "\r\n";

}  // namespace gmis
