#include "dbb/pipeline.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "dbb/errors.hpp"
#include "dbb/fsutil.hpp"
#include "dbb/hash.hpp"
#include "dbb/log.hpp"
#include "dbb/metrics.hpp"

namespace dbb::pipeline {

namespace {

PromptTemplate parse_template(const std::string& raw, const std::string& name) {
  const std::string sys_marker = "<<SYSTEM>>\n";
  const std::string user_marker = "<<USER>>\n";
  size_t sys = raw.find(sys_marker);
  size_t user = raw.find(user_marker);
  if (sys == std::string::npos || user == std::string::npos || user < sys)
    throw ConfigError("prompt template '" + name + "' needs <<SYSTEM>> and <<USER>> sections");
  PromptTemplate t;
  t.system = raw.substr(sys + sys_marker.size(), user - sys - sys_marker.size());
  t.user = raw.substr(user + user_marker.size());
  while (!t.system.empty() && (t.system.back() == '\n' || t.system.back() == '\r'))
    t.system.pop_back();
  while (!t.user.empty() && (t.user.back() == '\n' || t.user.back() == '\r'))
    t.user.pop_back();
  return t;
}

constexpr const char* kTemplateFiles[] = {"sum",          "gen_default",    "gen_grouped",
                                          "gen_hier_field", "gen_hier_final", "gen_prompted",
                                          "rec"};

std::string normalize_ws(const std::string& s) {
  std::string out;
  bool in_space = true;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

const std::string kReminder =
    "\n\nREMINDER: your previous reply could not be parsed. Reply again using exactly the six "
    "headings Headline:, Issue:, Position:, Argument:, Proposal:, Quotes: — one per line.";

}  // namespace

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t;
  std::array<PromptTemplate*, 7> slots = {&t.sum,          &t.gen_default,    &t.gen_grouped,
                                          &t.gen_hier_field, &t.gen_hier_final, &t.gen_prompted,
                                          &t.rec};
  for (size_t i = 0; i < slots.size(); ++i) {
    auto path = dir / (std::string(kTemplateFiles[i]) + ".txt");
    *slots[i] = parse_template(fsutil::read_file(path), kTemplateFiles[i]);
  }
  return t;
}

std::string PromptTemplates::digest() const {
  std::string material;
  const std::array<const PromptTemplate*, 7> slots = {&sum,          &gen_default,
                                                      &gen_grouped,  &gen_hier_field,
                                                      &gen_hier_final, &gen_prompted, &rec};
  for (size_t i = 0; i < slots.size(); ++i) {
    material += kTemplateFiles[i];
    material += '\x1f';
    material += slots[i]->system;
    material += '\x1f';
    material += slots[i]->user;
    material += '\x1e';
  }
  return hash::sha256_hex(material);
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      size_t close = tmpl.find('}', i + 1);
      if (close != std::string::npos) {
        std::string key = tmpl.substr(i + 1, close - i - 1);
        auto it = values.find(key);
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

Pipeline::Pipeline(PromptTemplates templates) : templates_(std::move(templates)) {}

StructuredSummary Pipeline::summarise_intervention(const corpus::Debate& debate,
                                                   const corpus::Intervention& intervention,
                                                   gateway::ChatClient& client) const {
  std::map<std::string, std::string> values = {
      {"title", debate.title},
      {"speaker_name", intervention.speaker.display_name},
      {"party_group", intervention.speaker.party_group},
      {"k", std::to_string(intervention.order_index)},
      {"n", std::to_string(debate.n())},
      {"speech", intervention.text},
  };
  gateway::CompletionRequest request;
  request.system_prompt = templates_.sum.system;
  request.user_prompt = render_template(templates_.sum.user, values);
  request.schema = gateway::ReplySchema::structured_summary;

  StructuredSummary summary;
  bool parsed = false;
  std::string last_error;
  for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
    if (attempt == 1) request.user_prompt += kReminder;
    try {
      auto result = client.complete(request);
      summary = parse_structured_summary(result.text);
      parsed = true;
    } catch (const ParseError& e) {
      last_error = e.what();
    } catch (const ProtocolError& e) {
      last_error = e.what();
    }
  }
  summary.speaker_id = intervention.speaker.speaker_id;
  summary.order_index = intervention.order_index;
  if (!parsed) {
    summary.headline = kEmptyMarker;
    summary.issue = kEmptyMarker;
    summary.position = kEmptyMarker;
    summary.argument = kEmptyMarker;
    summary.proposal = kEmptyMarker;
    summary.quotes.clear();
    summary.failed = true;
    summary.error = last_error;
    log::warn("summarise failed for debate '" + debate.debate_id + "' intervention " +
              std::to_string(intervention.order_index) + ": " + last_error);
    return summary;
  }

  // Quotes must be verbatim (whitespace-lenient) substrings of the speech.
  std::string speech_norm = normalize_ws(intervention.text);
  std::vector<std::string> kept;
  for (const auto& q : summary.quotes) {
    if (speech_norm.find(normalize_ws(q)) != std::string::npos) {
      kept.push_back(q);
    } else {
      log::warn("dropping non-verbatim quote for debate '" + debate.debate_id +
                "' intervention " + std::to_string(intervention.order_index));
    }
  }
  summary.quotes = std::move(kept);
  return summary;
}

namespace {

struct FieldView {
  const char* key;           // intermediate map key
  const char* display;       // section header in prompts
  const std::string& (*get)(const StructuredSummary&);
};

const std::string& get_issue(const StructuredSummary& s) { return s.issue; }
const std::string& get_position(const StructuredSummary& s) { return s.position; }
const std::string& get_argument(const StructuredSummary& s) { return s.argument; }
const std::string& get_proposal(const StructuredSummary& s) { return s.proposal; }

constexpr FieldView kFields[] = {
    {"issue", "Issues", &get_issue},
    {"position", "Positions", &get_position},
    {"argument", "Arguments", &get_argument},
    {"proposal", "Proposals", &get_proposal},
};

// "- name (party): field-text", one line per speaker, empty-marker lines
// dropped so the generator never sees padding.
std::string attributed_lines(const std::vector<StructuredSummary>& summaries,
                             const std::map<std::string, const corpus::Intervention*>& by_id,
                             const FieldView& field) {
  std::string out;
  for (const auto& s : summaries) {
    if (s.failed) continue;
    const std::string& value = field.get(s);
    if (value == kEmptyMarker) continue;
    auto it = by_id.find(s.speaker_id + "#" + std::to_string(s.order_index));
    if (it == by_id.end()) continue;
    const auto& sp = it->second->speaker;
    out += "- " + sp.display_name + " (" + sp.party_group + "): " + value + "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::map<std::string, const corpus::Intervention*> index_interventions(
    const corpus::Debate& debate) {
  std::map<std::string, const corpus::Intervention*> by_id;
  for (const auto& iv : debate.interventions)
    by_id[iv.speaker.speaker_id + "#" + std::to_string(iv.order_index)] = &iv;
  return by_id;
}

void check_ordered(const std::vector<StructuredSummary>& summaries) {
  if (summaries.empty()) throw ArgumentError("generate: empty summary list");
  for (size_t i = 1; i < summaries.size(); ++i) {
    if (summaries[i].order_index < summaries[i - 1].order_index)
      throw ArgumentError("generate: summaries not ordered by order_index");
  }
}

}  // namespace

DebateSummary Pipeline::generate_stacked(Method method, const corpus::Debate& debate,
                                         const std::vector<StructuredSummary>& summaries,
                                         gateway::ChatClient& client) const {
  const PromptTemplate& tpl =
      method == Method::Prompted ? templates_.gen_prompted : templates_.gen_default;
  auto by_id = index_interventions(debate);
  std::string blocks;
  for (const auto& s : summaries) {
    if (s.failed) {
      log::warn("generate: skipping failed summary for intervention " +
                std::to_string(s.order_index));
      continue;
    }
    auto it = by_id.find(s.speaker_id + "#" + std::to_string(s.order_index));
    if (it == by_id.end()) continue;
    const auto& sp = it->second->speaker;
    blocks += "Speaker: " + sp.display_name + " (" + sp.party_group + "), intervention " +
              std::to_string(s.order_index) + " of " + std::to_string(debate.n()) + "\n";
    blocks += render_summary(s);
    blocks += "\n\n";
  }
  if (!blocks.empty()) blocks.erase(blocks.size() - 2);

  gateway::CompletionRequest request;
  request.system_prompt = tpl.system;
  request.user_prompt =
      render_template(tpl.user, {{"title", debate.title}, {"summaries", blocks}});
  request.schema = gateway::ReplySchema::free_text;

  auto result = client.complete(request);
  DebateSummary out;
  out.debate_id = debate.debate_id;
  out.method = method;
  out.text = result.text;
  out.backend = client.config().model_name;
  out.token_count = static_cast<int>(metrics::tokenize(out.text).size());
  return out;
}

DebateSummary Pipeline::generate_grouped(const corpus::Debate& debate,
                                         const std::vector<StructuredSummary>& summaries,
                                         gateway::ChatClient& client) const {
  auto by_id = index_interventions(debate);
  std::map<std::string, std::string> values = {{"title", debate.title}};
  values["issue_lines"] = attributed_lines(summaries, by_id, kFields[0]);
  values["position_lines"] = attributed_lines(summaries, by_id, kFields[1]);
  values["argument_lines"] = attributed_lines(summaries, by_id, kFields[2]);
  values["proposal_lines"] = attributed_lines(summaries, by_id, kFields[3]);

  gateway::CompletionRequest request;
  request.system_prompt = templates_.gen_grouped.system;
  request.user_prompt = render_template(templates_.gen_grouped.user, values);
  request.schema = gateway::ReplySchema::free_text;

  auto result = client.complete(request);
  DebateSummary out;
  out.debate_id = debate.debate_id;
  out.method = Method::Grouped;
  out.text = result.text;
  out.backend = client.config().model_name;
  out.token_count = static_cast<int>(metrics::tokenize(out.text).size());
  return out;
}

DebateSummary Pipeline::generate_hierarchical(const corpus::Debate& debate,
                                              const std::vector<StructuredSummary>& summaries,
                                              gateway::ChatClient& client) const {
  auto by_id = index_interventions(debate);
  DebateSummary out;
  out.debate_id = debate.debate_id;
  out.method = Method::Hierarchical;

  // Stage 1: one completion per field across all speakers.
  for (const auto& field : kFields) {
    gateway::CompletionRequest request;
    request.system_prompt = templates_.gen_hier_field.system;
    request.user_prompt = render_template(
        templates_.gen_hier_field.user,
        {{"title", debate.title},
         {"field_name", field.display},
         {"field_lines", attributed_lines(summaries, by_id, field)}});
    request.schema = gateway::ReplySchema::free_text;
    try {
      out.intermediate[field.key] = client.complete(request).text;
    } catch (const std::exception& e) {
      throw StageError("generate_hierarchical: field '" + std::string(field.key) +
                       "' failed: " + e.what());
    }
  }

  // Stage 2: aggregate the four field summaries.
  gateway::CompletionRequest request;
  request.system_prompt = templates_.gen_hier_final.system;
  request.user_prompt = render_template(templates_.gen_hier_final.user,
                                        {{"title", debate.title},
                                         {"issue_summary", out.intermediate["issue"]},
                                         {"position_summary", out.intermediate["position"]},
                                         {"argument_summary", out.intermediate["argument"]},
                                         {"proposal_summary", out.intermediate["proposal"]}});
  request.schema = gateway::ReplySchema::free_text;
  try {
    out.text = client.complete(request).text;
  } catch (const std::exception& e) {
    throw StageError(std::string("generate_hierarchical: final aggregation failed: ") +
                     e.what());
  }
  out.backend = client.config().model_name;
  out.token_count = static_cast<int>(metrics::tokenize(out.text).size());
  return out;
}

DebateSummary Pipeline::generate(Method method, const corpus::Debate& debate,
                                 const std::vector<StructuredSummary>& summaries,
                                 gateway::ChatClient& client) const {
  check_ordered(summaries);
  try {
    switch (method) {
      case Method::Default:
      case Method::Prompted:
        return generate_stacked(method, debate, summaries, client);
      case Method::Grouped:
        return generate_grouped(debate, summaries, client);
      case Method::Hierarchical:
        return generate_hierarchical(debate, summaries, client);
    }
    throw ArgumentError("generate: unknown method");
  } catch (const StageError&) {
    throw;
  } catch (const ArgumentError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("generate_" + method_name(method) + " failed for debate '" +
                     debate.debate_id + "': " + e.what());
  }
}

ReconstructionOutput Pipeline::reconstruct_intervention(const DebateSummary& debate_summary,
                                                        const corpus::Speaker& speaker,
                                                        gateway::ChatClient& client) const {
  if (debate_summary.text.empty())
    throw ArgumentError("reconstruct_intervention: empty debate summary");

  gateway::CompletionRequest request;
  request.system_prompt = templates_.rec.system;
  request.user_prompt = render_template(templates_.rec.user,
                                        {{"debate_summary", debate_summary.text},
                                         {"speaker_name", speaker.display_name},
                                         {"party_group", speaker.party_group}});
  request.schema = gateway::ReplySchema::structured_summary;

  ReconstructionOutput out;
  bool parsed = false;
  std::string last_error;
  for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
    if (attempt == 1) request.user_prompt += kReminder;
    try {
      auto result = client.complete(request);
      out.structured = parse_structured_summary(result.text);
      parsed = true;
    } catch (const ParseError& e) {
      last_error = e.what();
    } catch (const ProtocolError& e) {
      last_error = e.what();
    }
  }
  out.structured.speaker_id = speaker.speaker_id;
  if (!parsed) {
    out.structured.headline = kEmptyMarker;
    out.structured.issue = kEmptyMarker;
    out.structured.position = kEmptyMarker;
    out.structured.argument = kEmptyMarker;
    out.structured.proposal = kEmptyMarker;
    out.structured.quotes.clear();
    out.structured.failed = true;
    out.structured.error = last_error;
    out.found = false;
    log::warn("reconstruct failed for debate '" + debate_summary.debate_id + "' speaker '" +
              speaker.speaker_id + "': " + last_error);
    return out;
  }
  out.found = !out.structured.all_empty();
  return out;
}

}  // namespace dbb::pipeline
