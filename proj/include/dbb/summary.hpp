#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dbb::pipeline {

// Canonical empty-marker for absent content; fidelity scoring of absent
// fields is only well-defined because every stage uses the same marker.
inline constexpr std::string_view kEmptyMarker = "none stated";

enum class Method { Default, Grouped, Hierarchical, Prompted };

inline constexpr Method kAllMethods[] = {Method::Default, Method::Grouped,
                                         Method::Hierarchical, Method::Prompted};

std::string method_name(Method m);         // "default", "grouped", ...
std::string method_display_name(Method m); // "Default", "Grouped", "Hierarchical", "Prompt"
Method method_from_name(const std::string& name);

// Six-field structured summary of one intervention (both the summariser's
// output and the reconstructor's output use this shape).
struct StructuredSummary {
  std::string headline;
  std::string issue;
  std::string position;
  std::string argument;
  std::string proposal;
  std::vector<std::string> quotes;
  std::string speaker_id;
  int order_index = 0;
  bool failed = false;      // stage error recorded against this intervention
  std::string error;

  bool all_empty() const;   // every content field is the empty-marker
  bool operator==(const StructuredSummary&) const = default;
};

struct DebateSummary {
  std::string debate_id;
  Method method = Method::Default;
  std::string text;
  // Hierarchical only: field-name -> aggregated field summary.
  std::map<std::string, std::string> intermediate;
  std::string backend;      // model name that produced it
  int token_count = 0;

  bool operator==(const DebateSummary&) const = default;
};

struct ReconstructionOutput {
  StructuredSummary structured;
  bool found = false;       // speaker located in the debate summary

  bool operator==(const ReconstructionOutput&) const = default;
};

// Case-insensitive scan for the six headings at line starts; content of each
// field runs until the next heading; missing fields become the empty-marker.
// Throws ParseError when no heading at all is found.
StructuredSummary parse_structured_summary(const std::string& text);

// Canonical text rendering: six headings in fixed order, empty-markers
// included. Both sides of every fidelity comparison go through this.
std::string render_summary(const StructuredSummary& s);

std::string summary_to_json(const StructuredSummary& s);
StructuredSummary summary_from_json(const std::string& text);
std::string debate_summary_to_json(const DebateSummary& d);
DebateSummary debate_summary_from_json(const std::string& text);
std::string reconstruction_to_json(const ReconstructionOutput& r);
ReconstructionOutput reconstruction_from_json(const std::string& text);

}  // namespace dbb::pipeline
