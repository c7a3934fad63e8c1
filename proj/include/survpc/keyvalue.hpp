#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <string>

#include "survpc/errors.hpp"

namespace survpc {

// Flat key=value files: '#' starts a comment, blank lines are skipped,
// whitespace around keys and values is trimmed.
inline std::map<std::string, std::string> parse_key_values(std::istream& in,
                                                           const std::string& source) {
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };

  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw parse_error(source + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw parse_error(source + ":" + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      throw parse_error(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

inline double parse_double_value(const std::string& value, const std::string& key) {
  double v = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw parse_error("invalid numeric value '" + value + "' for key '" + key + "'");
  return v;
}

inline std::uint64_t parse_u64_value(const std::string& value, const std::string& key) {
  std::uint64_t v = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw parse_error("invalid integer value '" + value + "' for key '" + key + "'");
  return v;
}

}  // namespace survpc
