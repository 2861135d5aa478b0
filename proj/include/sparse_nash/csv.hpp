#pragma once

// Minimal RFC-4180 writer: comma separated, LF line endings, fields quoted
// only when needed, numbers in shortest round-trip form with '.' decimals.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "sparse_nash/error.hpp"

namespace sparse_nash {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw Error("format_number: conversion failed");
  return std::string(buf, end);
}

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(&out) {}

  template <class... Ts>
  void row(const Ts&... fields) {
    bool first = true;
    ((write_field(fields, first)), ...);
    *out_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) write_field(f, first);
    *out_ << '\n';
  }

 private:
  template <class T>
  void write_field(const T& v, bool& first) {
    if (!first) *out_ << ',';
    first = false;
    if constexpr (std::is_same_v<T, bool>)
      *out_ << (v ? "true" : "false");
    else if constexpr (std::is_floating_point_v<T>)
      *out_ << format_number(static_cast<double>(v));
    else if constexpr (std::is_integral_v<T>)
      *out_ << std::to_string(v);
    else
      *out_ << csv_escape(std::string_view(v));
  }

  std::ostream* out_;
};

/// Opens a file in binary mode so that '\n' is written verbatim.
inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path + " for writing");
  return f;
}

}  // namespace sparse_nash
