#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace cauchy::detail {

// Shortest round-trip representation; NaN is written as "nan".
inline void append_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline std::string format_number(double v) {
  std::string s;
  append_number(s, v);
  return s;
}

}  // namespace cauchy::detail
