#include "dbb/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dbb/errors.hpp"
#include "dbb/hash.hpp"
#include "dbb/http_util.hpp"

using nlohmann::json;

namespace dbb::metrics {

namespace {

// Decodes one UTF-8 codepoint starting at `i`; advances `i` past it. Invalid
// bytes are consumed one at a time and reported as U+FFFD.
char32_t next_codepoint(std::string_view s, size_t& i, size_t& len) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  size_t remaining = s.size() - i;
  auto cont = [&](size_t k) {
    return k < remaining && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if (c < 0x80) {
    len = 1;
  } else if ((c & 0xE0) == 0xC0 && cont(1)) {
    len = 2;
  } else if ((c & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    len = 3;
  } else if ((c & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    len = 4;
  } else {
    len = 1;
    i += 1;
    return 0xFFFD;
  }
  char32_t cp = 0;
  switch (len) {
    case 1: cp = c; break;
    case 2: cp = c & 0x1F; break;
    case 3: cp = c & 0x0F; break;
    default: cp = c & 0x07; break;
  }
  for (size_t k = 1; k < len; ++k)
    cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  i += len;
  return cp;
}

bool is_space_cp(char32_t cp) {
  if (cp < 0x80) return std::isspace(static_cast<int>(cp)) != 0;
  switch (cp) {
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_word_cp(char32_t cp) {
  if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
  if (is_space_cp(cp)) return false;
  // Common non-ASCII punctuation; everything else counts as a word character.
  switch (cp) {
    case 0x00A1: case 0x00A7: case 0x00AB: case 0x00B6: case 0x00B7:
    case 0x00BB: case 0x00BF: case 0x2039: case 0x203A: case 0x3001:
    case 0x3002:
      return false;
    default:
      break;
  }
  if (cp >= 0x2010 && cp <= 0x2027) return false;  // dashes, curly quotes, bullets
  if (cp >= 0x2E00 && cp <= 0x2E7F) return false;  // supplemental punctuation
  return cp != 0xFFFD;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  size_t i = 0;
  while (i < text.size()) {
    size_t start = i;
    size_t len = 0;
    char32_t cp = next_codepoint(text, i, len);
    if (is_space_cp(cp)) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    if (is_word_cp(cp)) {
      if (cp < 0x80) {
        current.push_back(
            static_cast<char>(std::tolower(static_cast<int>(cp))));
      } else {
        current.append(text.substr(start, len));
      }
      continue;
    }
    // Punctuation: flush the run, emit the mark as its own token.
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
    tokens.emplace_back(text.substr(start, len));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

StubEmbeddingProvider::StubEmbeddingProvider(int dimension, std::string seed_salt)
    : dim_(dimension), salt_(std::move(seed_salt)) {
  if (dimension < 2) throw ArgumentError("stub embedding dimension must be >= 2");
}

std::vector<double> StubEmbeddingProvider::vector_for(const std::string& token) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(token);
    if (it != cache_.end()) return it->second;
  }
  // Box-Muller over the engine's raw 53-bit uniforms keeps the vector a pure
  // function of the token bytes, independent of libstdc++'s distributions.
  std::mt19937_64 rng(hash::fnv1a64(salt_ + "\x1f" + token));
  auto uniform = [&rng]() {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  };
  std::vector<double> v(static_cast<size_t>(dim_));
  for (int k = 0; k < dim_; k += 2) {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    v[static_cast<size_t>(k)] = r * std::cos(2.0 * M_PI * u2);
    if (k + 1 < dim_) v[static_cast<size_t>(k) + 1] = r * std::sin(2.0 * M_PI * u2);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.emplace(token, std::move(v)).first->second;
}

std::vector<std::vector<double>> StubEmbeddingProvider::embed(
    const std::vector<std::string>& tokens) {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vector_for(t));
  return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config, int dimension)
    : config_(std::move(config)), dim_(dimension) {
  if (config_.base_url.empty())
    throw ConfigError("remote embedding provider requires base_url");
}

std::vector<std::vector<double>> RemoteEmbeddingProvider::embed(
    const std::vector<std::string>& tokens) {
  if (tokens.empty()) return {};
  json body;
  body["model"] = config_.model_name;
  body["input"] = tokens;
  std::map<std::string, std::string> headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
      headers["Authorization"] = std::string("Bearer ") + key;
  }
  http::PostOptions opts;
  opts.timeout_ms = config_.timeout_ms;
  opts.max_retries = config_.max_retries;
  opts.backoff_ms = config_.backoff_ms;
  std::string reply =
      http::post_json(config_.base_url, config_.api_path, headers, body.dump(), opts);

  json j = json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() ||
      j["data"].size() != tokens.size()) {
    throw ProtocolError("embedding endpoint returned malformed payload");
  }
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& item : j["data"]) {
    auto v = item.at("embedding").get<std::vector<double>>();
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= 0.0) throw ProtocolError("embedding endpoint returned a zero vector");
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<TokenEmbedding> embed_tokens(std::string_view text, EmbeddingProvider& provider) {
  auto tokens = tokenize(text);
  auto vectors = provider.embed(tokens);
  std::vector<TokenEmbedding> out;
  out.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i)
    out.push_back({tokens[i], std::move(vectors[i])});
  return out;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double rescale(double score, double b) { return (score - b) / (1.0 - b); }

}  // namespace

FidelityScore bertscore(const std::string& candidate, const std::string& reference,
                        EmbeddingProvider& provider, const ScoreOptions& options) {
  auto ref = provider.embed(tokenize(reference));
  auto cand = provider.embed(tokenize(candidate));

  FidelityScore score;
  if (ref.empty() || cand.empty()) {
    score.degenerate = true;
    return score;
  }

  double recall = 0.0;
  for (const auto& x : ref) {
    double best = -2.0;
    for (const auto& y : cand) best = std::max(best, dot(x, y));
    recall += best;
  }
  recall /= static_cast<double>(ref.size());

  double precision = 0.0;
  for (const auto& y : cand) {
    double best = -2.0;
    for (const auto& x : ref) best = std::max(best, dot(x, y));
    precision += best;
  }
  precision /= static_cast<double>(cand.size());

  score.precision = precision;
  score.recall = recall;
  double pr = precision + recall;
  score.f1 = pr > 0.0 ? 2.0 * precision * recall / pr : 0.0;

  if (options.baseline.has_value()) {
    double b = *options.baseline;
    if (b >= 1.0) throw ArgumentError("rescaling baseline must be < 1");
    score.precision = rescale(score.precision, b);
    score.recall = rescale(score.recall, b);
    score.f1 = rescale(score.f1, b);
    score.rescaled = true;
  }
  return score;
}

FidelityScore intervention_fidelity(const pipeline::StructuredSummary& original,
                                    const pipeline::StructuredSummary& reconstructed,
                                    EmbeddingProvider& provider, const ScoreOptions& options) {
  return bertscore(pipeline::render_summary(reconstructed), pipeline::render_summary(original),
                   provider, options);
}

double debate_fidelity(const std::vector<FidelityScore>& per_intervention) {
  if (per_intervention.empty())
    throw ArgumentError("debate_fidelity: empty score list");
  double sum = 0.0;
  for (const auto& s : per_intervention) sum += s.f1;
  return sum / static_cast<double>(per_intervention.size());
}

RatioReport ratios(const pipeline::DebateSummary& debate_summary,
                   const std::vector<pipeline::StructuredSummary>& intervention_summaries,
                   const std::vector<pipeline::ReconstructionOutput>& reconstructions) {
  RatioReport r;
  r.tokens_summary = static_cast<long>(tokenize(debate_summary.text).size());
  for (const auto& s : intervention_summaries)
    r.tokens_source += static_cast<long>(tokenize(pipeline::render_summary(s)).size());
  for (const auto& rec : reconstructions)
    r.tokens_reconstructed +=
        static_cast<long>(tokenize(pipeline::render_summary(rec.structured)).size());

  if (r.tokens_source > 0) {
    r.compression_ratio = static_cast<double>(r.tokens_summary) /
                          static_cast<double>(r.tokens_source);
  } else {
    r.degenerate = true;
  }
  if (r.tokens_summary > 0) {
    r.decompression_ratio = static_cast<double>(r.tokens_reconstructed) /
                            static_cast<double>(r.tokens_summary);
  } else {
    r.degenerate = true;
  }
  return r;
}

}  // namespace dbb::metrics
