#include "dbb/toml_lite.hpp"

#include <cctype>
#include <set>
#include <sstream>

#include "dbb/errors.hpp"
#include "dbb/fsutil.hpp"

namespace dbb::toml {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(size_t line_no, const std::string& what) {
  throw ConfigError("config parse error at line " + std::to_string(line_no) + ": " + what);
}

// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (c == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

std::string parse_quoted(const std::string& raw, size_t line_no) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
    fail(line_no, "expected quoted string: " + raw);
  std::string out;
  for (size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\' && i + 2 < raw.size() + 1) {
      char n = raw[++i];
      switch (n) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: fail(line_no, std::string("unsupported escape \\") + n);
      }
    } else {
      out.push_back(c);
    }
  }
  return out;
}

Value parse_scalar(const std::string& raw, size_t line_no) {
  Value v;
  if (raw.empty()) fail(line_no, "empty value");
  if (raw.front() == '"') {
    v.kind = Value::Kind::string;
    v.str = parse_quoted(raw, line_no);
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = Value::Kind::boolean;
    v.boolean = (raw == "true");
    return v;
  }
  bool is_float = raw.find_first_of(".eE") != std::string::npos;
  try {
    size_t pos = 0;
    if (is_float) {
      v.kind = Value::Kind::floating;
      v.floating = std::stod(raw, &pos);
    } else {
      v.kind = Value::Kind::integer;
      v.integer = std::stoll(raw, &pos);
      v.floating = static_cast<double>(v.integer);
    }
    if (pos != raw.size()) fail(line_no, "trailing characters in value: " + raw);
  } catch (const std::logic_error&) {
    fail(line_no, "cannot parse value: " + raw);
  }
  return v;
}

Value parse_value(const std::string& raw, size_t line_no) {
  if (!raw.empty() && raw.front() == '[') {
    if (raw.back() != ']') fail(line_no, "unterminated array");
    Value v;
    v.kind = Value::Kind::array;
    std::string body = raw.substr(1, raw.size() - 2);
    std::string item;
    bool in_str = false;
    for (size_t i = 0; i <= body.size(); ++i) {
      bool end = (i == body.size());
      char c = end ? ',' : body[i];
      if (!end && c == '"' && (i == 0 || body[i - 1] != '\\')) in_str = !in_str;
      if (c == ',' && !in_str) {
        std::string t = trim(item);
        if (!t.empty()) v.array.push_back(parse_scalar(t, line_no));
        item.clear();
      } else {
        item.push_back(c);
      }
    }
    return v;
  }
  return parse_scalar(raw, line_no);
}

}  // namespace

const Value* Table::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

bool Table::has(const std::string& key) const { return find(key) != nullptr; }

std::string Table::get_string(const std::string& key) const {
  const Value* v = find(key);
  if (!v) throw ConfigError("missing config key: " + key);
  if (v->kind != Value::Kind::string) throw ConfigError("config key is not a string: " + key);
  return v->str;
}

std::string Table::get_string_or(const std::string& key, const std::string& fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::string) throw ConfigError("config key is not a string: " + key);
  return v->str;
}

std::int64_t Table::get_int_or(const std::string& key, std::int64_t fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::integer) throw ConfigError("config key is not an integer: " + key);
  return v->integer;
}

double Table::get_double_or(const std::string& key, double fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::integer && v->kind != Value::Kind::floating)
    throw ConfigError("config key is not a number: " + key);
  return v->floating;
}

bool Table::get_bool_or(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (v->kind != Value::Kind::boolean) throw ConfigError("config key is not a boolean: " + key);
  return v->boolean;
}

std::vector<std::string> Table::get_string_array(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return {};
  if (v->kind == Value::Kind::string) return {v->str};
  if (v->kind != Value::Kind::array) throw ConfigError("config key is not an array: " + key);
  std::vector<std::string> out;
  for (const auto& item : v->array) {
    if (item.kind != Value::Kind::string)
      throw ConfigError("config array has non-string items: " + key);
    out.push_back(item.str);
  }
  return out;
}

std::vector<std::string> Table::subsections(const std::string& prefix) const {
  std::set<std::string> names;
  std::string p = prefix + ".";
  for (const auto& [key, _] : entries_) {
    if (key.rfind(p, 0) != 0) continue;
    std::string rest = key.substr(p.size());
    size_t dot = rest.find('.');
    if (dot != std::string::npos) names.insert(rest.substr(0, dot));
  }
  return {names.begin(), names.end()};
}

Table parse(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line_no, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail(line_no, "empty section name");
      continue;
    }
    size_t eq = std::string::npos;
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
      if (s[i] == '=' && !in_str) { eq = i; break; }
    }
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string raw = trim(s.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    std::string full = section.empty() ? key : section + "." + key;
    table.set(full, parse_value(raw, line_no));
  }
  return table;
}

Table parse_file(const std::string& path) {
  return parse(fsutil::read_file(path));
}

}  // namespace dbb::toml
