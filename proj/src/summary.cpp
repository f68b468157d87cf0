#include "dbb/summary.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dbb/errors.hpp"

using nlohmann::json;

namespace dbb::pipeline {

std::string method_name(Method m) {
  switch (m) {
    case Method::Default: return "default";
    case Method::Grouped: return "grouped";
    case Method::Hierarchical: return "hierarchical";
    case Method::Prompted: return "prompted";
  }
  return "?";
}

std::string method_display_name(Method m) {
  switch (m) {
    case Method::Default: return "Default";
    case Method::Grouped: return "Grouped";
    case Method::Hierarchical: return "Hierarchical";
    case Method::Prompted: return "Prompt";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw ArgumentError("unknown generator method: " + name);
}

bool StructuredSummary::all_empty() const {
  return headline == kEmptyMarker && issue == kEmptyMarker && position == kEmptyMarker &&
         argument == kEmptyMarker && proposal == kEmptyMarker && quotes.empty();
}

namespace {

constexpr std::array<std::string_view, 6> kHeadings = {"headline", "issue",    "position",
                                                       "argument", "proposal", "quotes"};

std::string trimmed(std::string_view s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Matches "<heading>:" at a line start, tolerating bullets and markdown
// decoration before and around the heading word.
int heading_index(const std::string& line, std::string* content_out) {
  size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  while (i < line.size() && (line[i] == '-' || line[i] == '*' || line[i] == '#')) ++i;
  while (i < line.size() && line[i] == ' ') ++i;
  std::string low = lower(line);
  for (size_t h = 0; h < kHeadings.size(); ++h) {
    const auto& name = kHeadings[h];
    if (low.compare(i, name.size(), name) != 0) continue;
    size_t j = i + name.size();
    while (j < line.size() && (line[j] == '*' || line[j] == ' ')) ++j;
    if (j < line.size() && line[j] == ':') {
      *content_out = trimmed(line.substr(j + 1));
      return static_cast<int>(h);
    }
  }
  return -1;
}

std::vector<std::string> split_quotes(const std::string& block) {
  std::vector<std::string> quotes;
  std::istringstream in(block);
  std::string line;
  while (std::getline(in, line)) {
    std::string q = trimmed(line);
    size_t i = 0;
    while (i < q.size() && (q[i] == '-' || q[i] == '*' || q[i] == ' ')) ++i;
    while (i < q.size() && std::isdigit(static_cast<unsigned char>(q[i]))) ++i;
    if (i < q.size() && (q[i] == '.' || q[i] == ')')) ++i;
    q = trimmed(q.substr(i));
    if (q.size() >= 2 && (q.front() == '"' || q.front() == '\'') && q.back() == q.front())
      q = trimmed(q.substr(1, q.size() - 2));
    if (!q.empty() && lower(q) != kEmptyMarker) quotes.push_back(q);
  }
  return quotes;
}

}  // namespace

StructuredSummary parse_structured_summary(const std::string& text) {
  std::array<std::string, 6> fields;
  std::array<bool, 6> seen{};
  int current = -1;
  int found = 0;

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string content;
    int h = heading_index(line, &content);
    if (h >= 0) {
      // First occurrence wins; repeated headings append like body lines.
      if (!seen[static_cast<size_t>(h)]) {
        seen[static_cast<size_t>(h)] = true;
        fields[static_cast<size_t>(h)] = content;
        current = h;
        ++found;
        continue;
      }
    }
    if (current >= 0) {
      auto& f = fields[static_cast<size_t>(current)];
      if (!f.empty()) f += "\n";
      f += line;
    }
  }
  if (found == 0) throw ParseError("no structured-summary headings found in reply");

  StructuredSummary s;
  auto finish = [&](size_t idx) {
    std::string v = trimmed(fields[idx]);
    if (v.empty()) return std::string(kEmptyMarker);
    return v;
  };
  s.headline = finish(0);
  s.issue = finish(1);
  s.position = finish(2);
  s.argument = finish(3);
  s.proposal = finish(4);
  s.quotes = split_quotes(fields[5]);
  return s;
}

std::string render_summary(const StructuredSummary& s) {
  auto field = [](const std::string& v) {
    return v.empty() ? std::string(kEmptyMarker) : v;
  };
  std::string quotes;
  if (s.quotes.empty()) {
    quotes = kEmptyMarker;
  } else {
    for (size_t i = 0; i < s.quotes.size(); ++i) {
      if (i) quotes += " ; ";
      quotes += s.quotes[i];
    }
  }
  std::string out;
  out += "Headline: " + field(s.headline) + "\n";
  out += "Issue: " + field(s.issue) + "\n";
  out += "Position: " + field(s.position) + "\n";
  out += "Argument: " + field(s.argument) + "\n";
  out += "Proposal: " + field(s.proposal) + "\n";
  out += "Quotes: " + quotes;
  return out;
}

std::string summary_to_json(const StructuredSummary& s) {
  json j;
  j["headline"] = s.headline;
  j["issue"] = s.issue;
  j["position"] = s.position;
  j["argument"] = s.argument;
  j["proposal"] = s.proposal;
  j["quotes"] = s.quotes;
  j["speaker_id"] = s.speaker_id;
  j["order_index"] = s.order_index;
  if (s.failed) {
    j["failed"] = true;
    j["error"] = s.error;
  }
  return j.dump(2);
}

StructuredSummary summary_from_json(const std::string& text) {
  json j = json::parse(text);
  StructuredSummary s;
  s.headline = j.value("headline", std::string(kEmptyMarker));
  s.issue = j.value("issue", std::string(kEmptyMarker));
  s.position = j.value("position", std::string(kEmptyMarker));
  s.argument = j.value("argument", std::string(kEmptyMarker));
  s.proposal = j.value("proposal", std::string(kEmptyMarker));
  s.quotes = j.value("quotes", std::vector<std::string>{});
  s.speaker_id = j.value("speaker_id", "");
  s.order_index = j.value("order_index", 0);
  s.failed = j.value("failed", false);
  s.error = j.value("error", "");
  return s;
}

std::string debate_summary_to_json(const DebateSummary& d) {
  json j;
  j["debate_id"] = d.debate_id;
  j["method"] = method_name(d.method);
  j["text"] = d.text;
  j["backend"] = d.backend;
  j["token_count"] = d.token_count;
  if (!d.intermediate.empty()) j["intermediate"] = d.intermediate;
  return j.dump(2);
}

DebateSummary debate_summary_from_json(const std::string& text) {
  json j = json::parse(text);
  DebateSummary d;
  d.debate_id = j.at("debate_id").get<std::string>();
  d.method = method_from_name(j.at("method").get<std::string>());
  d.text = j.at("text").get<std::string>();
  d.backend = j.value("backend", "");
  d.token_count = j.value("token_count", 0);
  if (j.contains("intermediate"))
    d.intermediate = j["intermediate"].get<std::map<std::string, std::string>>();
  return d;
}

std::string reconstruction_to_json(const ReconstructionOutput& r) {
  json j = json::parse(summary_to_json(r.structured));
  j["found"] = r.found;
  return j.dump(2);
}

ReconstructionOutput reconstruction_from_json(const std::string& text) {
  json j = json::parse(text);
  ReconstructionOutput r;
  r.structured = summary_from_json(text);
  r.found = j.value("found", false);
  return r;
}

}  // namespace dbb::pipeline
