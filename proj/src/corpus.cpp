#include "dbb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dbb/errors.hpp"
#include "dbb/log.hpp"

using nlohmann::json;

namespace dbb::corpus {

OrderCovariate relative_order(int k, int n) {
  if (n < 1) throw ArgumentError("relative_order: n must be >= 1, got " + std::to_string(n));
  if (k < 1 || k > n)
    throw ArgumentError("relative_order: k must be in [1, n], got k=" + std::to_string(k) +
                        " n=" + std::to_string(n));
  OrderCovariate c;
  c.x = static_cast<double>(k) / static_cast<double>(n);
  c.centered = c.x - 0.5;
  return c;
}

namespace {

std::string trimmed(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_record(size_t line_no, const std::string& what) {
  throw IngestError("corpus line " + std::to_string(line_no) + ": " + what);
}

std::string require_string(const json& j, const char* field, size_t line_no) {
  if (!j.contains(field) || !j[field].is_string())
    bad_record(line_no, std::string("missing or non-string field '") + field + "'");
  return j[field].get<std::string>();
}

Debate parse_debate_line(const std::string& line, size_t line_no, int cap) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    bad_record(line_no, std::string("invalid JSON: ") + e.what());
  }
  Debate d;
  d.debate_id = require_string(j, "debate_id", line_no);
  d.title = require_string(j, "title", line_no);
  if (d.debate_id.empty()) bad_record(line_no, "empty debate_id");
  if (!j.contains("interventions") || !j["interventions"].is_array())
    bad_record(line_no, "missing 'interventions' array");

  for (const auto& rec : j["interventions"]) {
    Intervention iv;
    iv.debate_id = d.debate_id;
    if (!rec.contains("order") || !rec["order"].is_number_integer())
      bad_record(line_no, "intervention missing integer 'order'");
    iv.order_index = rec["order"].get<int>();
    iv.speaker.speaker_id = require_string(rec, "speaker_id", line_no);
    iv.speaker.display_name = require_string(rec, "speaker_name", line_no);
    iv.speaker.party_group = require_string(rec, "party_group", line_no);
    iv.text = require_string(rec, "text", line_no);
    if (iv.speaker.speaker_id.empty()) bad_record(line_no, "empty speaker_id");
    if (iv.speaker.party_group.empty()) bad_record(line_no, "empty party_group");
    if (trimmed(iv.text).empty()) bad_record(line_no, "empty intervention text");
    d.interventions.push_back(std::move(iv));
  }
  if (d.interventions.empty()) bad_record(line_no, "debate has no interventions");

  std::stable_sort(d.interventions.begin(), d.interventions.end(),
                   [](const Intervention& a, const Intervention& b) {
                     return a.order_index < b.order_index;
                   });
  std::set<int> seen;
  for (const auto& iv : d.interventions) {
    if (!seen.insert(iv.order_index).second)
      bad_record(line_no, "duplicate order_index " + std::to_string(iv.order_index) +
                              " in debate '" + d.debate_id + "'");
  }
  for (int k = 0; k < d.n(); ++k) {
    if (d.interventions[static_cast<size_t>(k)].order_index != k + 1)
      bad_record(line_no, "order_index values are not exactly 1..n in debate '" + d.debate_id +
                              "' (gap at " + std::to_string(k + 1) + ")");
  }

  if (d.n() > cap) {
    log::warn("debate '" + d.debate_id + "' has " + std::to_string(d.n()) +
              " interventions; truncating to cap " + std::to_string(cap));
    d.interventions.resize(static_cast<size_t>(cap));
  }
  if (d.n() == 1) {
    log::warn("debate '" + d.debate_id + "' is degenerate (single intervention); x = 1 for it");
  }
  return d;
}

}  // namespace

std::vector<Debate> ingest_debates(const std::filesystem::path& path, int cap) {
  if (cap < 1) throw ArgumentError("ingest_debates: cap must be >= 1");
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open corpus file: " + path.string());

  std::vector<Debate> debates;
  std::set<std::string> ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    Debate d = parse_debate_line(line, line_no, cap);
    if (!ids.insert(d.debate_id).second)
      bad_record(line_no, "duplicate debate_id '" + d.debate_id + "'");
    debates.push_back(std::move(d));
  }
  return debates;
}

std::string debate_to_jsonl(const Debate& debate) {
  json j;
  j["debate_id"] = debate.debate_id;
  j["title"] = debate.title;
  j["interventions"] = json::array();
  for (const auto& iv : debate.interventions) {
    j["interventions"].push_back({{"order", iv.order_index},
                                  {"speaker_id", iv.speaker.speaker_id},
                                  {"speaker_name", iv.speaker.display_name},
                                  {"party_group", iv.speaker.party_group},
                                  {"text", iv.text}});
  }
  return j.dump();
}

void write_debates(const std::filesystem::path& path, const std::vector<Debate>& debates) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError("cannot write corpus file: " + path.string());
  for (const auto& d : debates) out << debate_to_jsonl(d) << "\n";
}

std::vector<int> PartyDesign::dummy_row(const std::string& party_group) const {
  std::vector<int> row(columns.size(), 0);
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == party_group) {
      row[i] = 1;
      break;
    }
  }
  return row;
}

PartyDesign party_design(const std::vector<Speaker>& per_intervention_speakers,
                         const std::optional<std::string>& reference) {
  std::map<std::string, int> counts;
  for (const auto& s : per_intervention_speakers) counts[s.party_group]++;
  if (counts.size() < 2)
    throw ArgumentError("party_design: need at least 2 distinct party groups, got " +
                        std::to_string(counts.size()));

  PartyDesign design;
  if (reference.has_value()) {
    if (counts.find(*reference) == counts.end())
      throw ArgumentError("party_design: reference party '" + *reference + "' not in corpus");
    design.reference = *reference;
  } else {
    // Most interventions wins; std::map iteration is lexicographic, so the
    // strict '>' keeps the lexicographically smallest label on ties.
    int best = -1;
    for (const auto& [party, count] : counts) {
      if (count > best) {
        best = count;
        design.reference = party;
      }
    }
  }
  for (const auto& [party, _] : counts) {
    if (party != design.reference) design.columns.push_back(party);
  }
  return design;
}

}  // namespace dbb::corpus
