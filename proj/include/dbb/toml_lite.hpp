#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dbb::toml {

// Minimal TOML subset reader: [section] / [section.sub] headers, key = value
// pairs with string/integer/float/boolean scalars and single-line arrays,
// '#' comments. Covers the config format; not a general TOML implementation.
struct Value {
  enum class Kind { string, integer, floating, boolean, array };
  Kind kind = Kind::string;
  std::string str;
  std::int64_t integer = 0;
  double floating = 0.0;
  bool boolean = false;
  std::vector<Value> array;
};

class Table {
 public:
  // Keys are dotted paths, e.g. "backends.mock.model".
  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<std::string> get_string_array(const std::string& key) const;

  // Direct child section names under `prefix` (e.g. "backends" -> {"mock", ...}).
  std::vector<std::string> subsections(const std::string& prefix) const;

  const std::map<std::string, Value>& entries() const { return entries_; }
  void set(const std::string& key, Value v) { entries_[key] = std::move(v); }

 private:
  const Value* find(const std::string& key) const;
  std::map<std::string, Value> entries_;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

}  // namespace dbb::toml
