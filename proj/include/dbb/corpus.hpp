#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dbb::corpus {

struct Speaker {
  std::string speaker_id;
  std::string display_name;
  std::string party_group;

  bool operator==(const Speaker&) const = default;
};

// One speech within a debate. order_index is 1-based and, within a debate,
// covers exactly 1..n.
struct Intervention {
  std::string debate_id;
  int order_index = 0;
  Speaker speaker;
  std::string text;

  bool operator==(const Intervention&) const = default;
};

struct Debate {
  std::string debate_id;
  std::string title;
  std::vector<Intervention> interventions;  // sorted by order_index

  int n() const { return static_cast<int>(interventions.size()); }
  bool operator==(const Debate&) const = default;
};

// Relative speaker order x = k/n in (0, 1]; centered value is x - 0.5 so that
// 0 refers to the middle of the debate.
struct OrderCovariate {
  double x = 0.0;
  double centered = 0.0;
};

OrderCovariate relative_order(int k, int n);

inline constexpr int kDefaultInterventionCap = 70;

// Reads a UTF-8 JSON-lines corpus, one debate per line. Debates longer than
// `cap` are truncated to their first `cap` interventions (warning logged).
// Malformed records and duplicate/gapped order indices raise IngestError with
// the offending line number.
std::vector<Debate> ingest_debates(const std::filesystem::path& path,
                                   int cap = kDefaultInterventionCap);

std::string debate_to_jsonl(const Debate& debate);
void write_debates(const std::filesystem::path& path, const std::vector<Debate>& debates);

// Dummy coding over party groups. `columns` holds the non-reference labels in
// lexicographic order; reference-group speakers map to the all-zeros vector.
struct PartyDesign {
  std::string reference;
  std::vector<std::string> columns;

  std::vector<int> dummy_row(const std::string& party_group) const;
};

// `per_intervention_speakers` carries one entry per intervention, so the
// default reference is the party with the most interventions (ties broken
// lexicographically).
PartyDesign party_design(const std::vector<Speaker>& per_intervention_speakers,
                         const std::optional<std::string>& reference = std::nullopt);

}  // namespace dbb::corpus
