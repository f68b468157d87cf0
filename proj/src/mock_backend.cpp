#include <algorithm>
#include <cctype>
#include <sstream>
#include <string>
#include <vector>

#include "dbb/gateway.hpp"
#include "dbb/hash.hpp"

// Deterministic offline backend. Replies are pure functions of the request
// hash, but they keep the shape of the live pipeline honest: summarisation
// replies carry stable content tokens per speaker, generator replies embed
// (or deliberately omit) those tokens per speaker, and reconstruction replies
// only ever mine what made it into the debate summary. That gives downstream
// scoring real variance to work with while staying bit-reproducible.

namespace dbb::gateway {

namespace {

constexpr size_t kTokenHexLen = 8;

bool is_hex(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

// Content tokens look like "tok3fa29c01": a single alphanumeric token for the
// scorer, recognizable enough to mine back out of prose.
std::vector<std::string> scan_tokens(const std::string& text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while ((pos = text.find("tok", pos)) != std::string::npos) {
    bool boundary = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
    size_t end = pos + 3;
    size_t hex = 0;
    while (end < text.size() && hex < kTokenHexLen && is_hex(text[end])) {
      ++end;
      ++hex;
    }
    if (boundary && hex == kTokenHexLen &&
        (end == text.size() || !std::isalnum(static_cast<unsigned char>(text[end])))) {
      out.push_back(text.substr(pos, end - pos));
      pos = end;
    } else {
      pos += 3;
    }
  }
  return out;
}

std::string token_from(const std::string& hex_source, size_t offset) {
  // hex_source is a sha256 hex string (64 chars); wrap around if needed.
  std::string t = "tok";
  for (size_t i = 0; i < kTokenHexLen; ++i)
    t.push_back(hex_source[(offset + i) % hex_source.size()]);
  return t;
}

std::string trimmed(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// "Anna Kovacs (Greens)" -> name + party.
bool split_name_party(const std::string& s, std::string* name, std::string* party) {
  size_t open = s.find(" (");
  if (open == std::string::npos) return false;
  size_t close = s.find(')', open);
  if (close == std::string::npos) return false;
  *name = trimmed(s.substr(0, open));
  *party = s.substr(open + 2, close - open - 2);
  return !name->empty();
}

struct Attribution {
  std::string name;
  std::string party;
  std::vector<std::string> tokens;
};

void merge_attribution(std::vector<Attribution>& list, const std::string& name,
                       const std::string& party, const std::vector<std::string>& tokens) {
  for (auto& a : list) {
    if (a.name == name) {
      for (const auto& t : tokens)
        if (std::find(a.tokens.begin(), a.tokens.end(), t) == a.tokens.end())
          a.tokens.push_back(t);
      return;
    }
  }
  list.push_back({name, party, tokens});
}

// Collects per-speaker attributions from any of the generator prompt layouts
// (stacked speaker blocks, "- name (party): text" lines, or prose sentences
// from an earlier mock pass).
std::vector<Attribution> collect_attributions(const std::string& prompt) {
  std::vector<Attribution> list;
  std::istringstream in(prompt);
  std::string line;
  std::string block_name, block_party;
  while (std::getline(in, line)) {
    std::string t = trimmed(line);
    if (t.rfind("Speaker: ", 0) == 0) {
      std::string rest = t.substr(9);
      size_t comma = rest.find(", intervention");
      if (comma != std::string::npos) rest = rest.substr(0, comma);
      std::string name, party;
      if (split_name_party(rest, &name, &party)) {
        block_name = name;
        block_party = party;
        merge_attribution(list, name, party, {});
      }
      continue;
    }
    if (t.rfind("- ", 0) == 0) {
      std::string rest = t.substr(2);
      size_t colon = rest.find("):");
      std::string head = colon == std::string::npos ? rest : rest.substr(0, colon + 1);
      std::string name, party;
      if (split_name_party(head, &name, &party)) {
        merge_attribution(list, name, party, scan_tokens(t));
        continue;
      }
    }
    auto tokens = scan_tokens(t);
    if (!tokens.empty()) {
      std::string name, party;
      if (split_name_party(t, &name, &party)) {
        merge_attribution(list, name, party, tokens);
      } else if (!block_name.empty()) {
        merge_attribution(list, block_name, block_party, tokens);
      }
    }
  }
  return list;
}

std::string first_words(const std::string& text, size_t count) {
  std::istringstream in(text);
  std::string word, out;
  size_t n = 0;
  while (n < count && (in >> word)) {
    if (n) out += " ";
    out += word;
    ++n;
  }
  return out;
}

std::string extract_after(const std::string& text, const std::string& marker) {
  size_t pos = text.find(marker);
  if (pos == std::string::npos) return "";
  return text.substr(pos + marker.size());
}

std::string reconstruction_reply(const CompletionRequest& request, const std::string& hash) {
  std::string after = extract_after(request.user_prompt, "Target speaker:");
  std::string name, party;
  if (!split_name_party(trimmed(after), &name, &party)) name = trimmed(first_words(after, 4));

  std::string summary = extract_after(request.user_prompt, "Debate summary:\n");
  size_t cut = summary.find("\nTarget speaker:");
  if (cut != std::string::npos) summary = summary.substr(0, cut);

  const std::string none = "none stated";
  std::string issue = none, position = none, argument = none, proposal = none;
  std::string headline = none;

  size_t mention = summary.find(name);
  if (!name.empty() && mention != std::string::npos) {
    size_t line_start = summary.rfind('\n', mention);
    line_start = line_start == std::string::npos ? 0 : line_start + 1;
    size_t line_end = summary.find('\n', mention);
    if (line_end == std::string::npos) line_end = summary.size();
    auto tokens = scan_tokens(summary.substr(line_start, line_end - line_start));

    // Per-backend reconstruction noise: occasionally drop the last field or
    // hallucinate an extra token, so different reconstructor backends give
    // correlated-but-distinct fidelity scores.
    std::uint64_t v = hash::fnv1a64(hash + "|rec") % 8;
    if (v == 0 && !tokens.empty()) tokens.pop_back();
    if (v == 1) tokens.push_back(token_from(hash, 40));

    headline = name + " in the debate summary";
    if (tokens.size() > 0) issue = name + " addressed " + tokens[0];
    if (tokens.size() > 1) position = name + " held the position " + tokens[1];
    if (tokens.size() > 2) argument = name + " argued " + tokens[2];
    if (tokens.size() > 3) proposal = name + " proposed " + tokens[3];
    if (tokens.empty()) headline = name + " contributed to the debate";
  }

  std::string out;
  out += "Headline: " + headline + "\n";
  out += "Issue: " + issue + "\n";
  out += "Position: " + position + "\n";
  out += "Argument: " + argument + "\n";
  out += "Proposal: " + proposal + "\n";
  out += "Quotes: none stated\n";
  return out;
}

std::string summarisation_reply(const CompletionRequest& request, const std::string& hash) {
  std::string name = "the speaker";
  std::string party;
  std::istringstream in(request.user_prompt);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trimmed(line);
    if (t.rfind("Speaker: ", 0) == 0) {
      split_name_party(t.substr(9), &name, &party);
      break;
    }
  }
  std::string speech = trimmed(extract_after(request.user_prompt, "Speech:\n"));

  std::string q1 = first_words(speech, 10);
  // Second quote: a window further into the speech, still verbatim.
  std::string rest = speech.size() > q1.size() ? trimmed(speech.substr(q1.size())) : "";
  std::string q2 = first_words(rest, 8);

  std::string out;
  out += "Headline: " + name + " speaks on " + token_from(hash, 32) + "\n";
  out += "Issue: " + name + " raised the issue of " + token_from(hash, 0) + " in this debate\n";
  out += "Position: " + name + " takes the position that " + token_from(hash, 8) +
         " deserves priority\n";
  out += "Argument: " + name + " argued that " + token_from(hash, 16) +
         " justifies this stance\n";
  out += "Proposal: " + name + " proposed " + token_from(hash, 24) + " as the way forward\n";
  out += "Quotes:\n";
  if (!q1.empty()) out += "- \"" + q1 + "\"\n";
  if (!q2.empty()) out += "- \"" + q2 + "\"\n";
  return out;
}

std::string generator_reply(const CompletionRequest& request, const std::string& hash) {
  auto speakers = collect_attributions(request.user_prompt);
  if (speakers.empty()) {
    return "A wide-ranging exchange took place; see transcript " + token_from(hash, 0) +
           " for the unabridged record of the session.";
  }

  bool field_stage = request.user_prompt.find("\nField: ") != std::string::npos;

  std::ostringstream out;
  if (field_stage) {
    out << "Contributions on this aspect of the debate:\n";
    for (const auto& s : speakers) {
      if (s.tokens.empty()) continue;
      out << s.name << " (" << s.party << ") noted " << s.tokens.front() << ".\n";
    }
    out << "These points framed the discussion.\n";
    return out.str();
  }

  out << "The debate brought together " << speakers.size() << " speakers.\n";
  for (const auto& s : speakers) {
    // Deterministic per-speaker coverage: most speakers are represented in
    // full, some only in passing, some dropped — the bias the audit measures.
    std::uint64_t v = hash::fnv1a64(hash + "|" + s.name) % 10;
    if (v >= 8) continue;
    if (v >= 6 || s.tokens.empty()) {
      out << s.name << " (" << s.party << ") also contributed to the discussion.\n";
      continue;
    }
    out << s.name << " (" << s.party << ") addressed " << s.tokens[0];
    if (s.tokens.size() > 1) out << ", held the position " << s.tokens[1];
    if (s.tokens.size() > 2) out << ", argued " << s.tokens[2];
    if (s.tokens.size() > 3) out << ", and proposed " << s.tokens[3];
    out << ".\n";
  }
  out << "Overall the chamber weighed these contributions against each other.\n";
  return out.str();
}

}  // namespace

std::string mock_structured_reply(const CompletionRequest& request,
                                  const std::string& request_hash) {
  if (request.schema == ReplySchema::structured_summary) {
    if (request.user_prompt.find("Target speaker:") != std::string::npos)
      return reconstruction_reply(request, request_hash);
    return summarisation_reply(request, request_hash);
  }
  return generator_reply(request, request_hash);
}

}  // namespace dbb::gateway
