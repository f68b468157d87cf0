#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dbb/summary.hpp"

namespace dbb::metrics {

// Deterministic Unicode-aware tokenizer: maximal letter/digit runs become
// tokens, punctuation marks are single-character tokens, whitespace is
// discarded. ASCII letters are lowercased; other codepoints pass through.
std::vector<std::string> tokenize(std::string_view text);

struct TokenEmbedding {
  std::string token;
  std::vector<double> vector;  // unit L2 norm
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // One unit vector per token, in order.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) = 0;
  virtual int dimension() const = 0;
};

// Maps each distinct token string to a pseudo-random unit vector seeded from
// the token's hash; identical tokens always get identical vectors, and for
// the default dimension distinct tokens are near-orthogonal.
class StubEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit StubEmbeddingProvider(int dimension = 256, std::string seed_salt = "");
  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) override;
  int dimension() const override { return dim_; }

  std::vector<double> vector_for(const std::string& token);

 private:
  int dim_;
  std::string salt_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

struct RemoteEmbeddingConfig {
  std::string base_url;
  std::string api_path = "/v1/embeddings";
  std::string model_name;
  std::string api_key_env;  // name of env var holding the key, may be empty
  int max_retries = 3;
  int timeout_ms = 30000;
  int backoff_ms = 250;
};

// JSON embeddings endpoint client; vectors are re-normalized on arrival.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config, int dimension);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) override;
  int dimension() const override { return dim_; }

 private:
  RemoteEmbeddingConfig config_;
  int dim_;
};

std::vector<TokenEmbedding> embed_tokens(std::string_view text, EmbeddingProvider& provider);

struct FidelityScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool rescaled = false;
  bool degenerate = false;  // empty candidate or reference
};

struct ScoreOptions {
  // Optional affine rescaling (score - b) / (1 - b), applied to P, R and F1
  // independently. Off by default.
  std::optional<double> baseline;
};

// Greedy-matching token-embedding score. X = embeddings(reference),
// Y = embeddings(candidate); R averages max-cosine over X, P over Y.
FidelityScore bertscore(const std::string& candidate, const std::string& reference,
                        EmbeddingProvider& provider, const ScoreOptions& options = {});

// Scores a reconstruction against the original intervention summary; both are
// rendered to canonical six-heading text first. The reconstruction is the
// candidate, the original is the reference.
FidelityScore intervention_fidelity(const pipeline::StructuredSummary& original,
                                    const pipeline::StructuredSummary& reconstructed,
                                    EmbeddingProvider& provider,
                                    const ScoreOptions& options = {});

// Arithmetic mean of F1 values, zeros from failed/absent reconstructions
// included. Throws ArgumentError on an empty list.
double debate_fidelity(const std::vector<FidelityScore>& per_intervention);

struct RatioReport {
  double compression_ratio = 0.0;    // tokens_summary / tokens_source
  double decompression_ratio = 0.0;  // tokens_reconstructed / tokens_summary
  long tokens_summary = 0;
  long tokens_source = 0;
  long tokens_reconstructed = 0;
  bool degenerate = false;  // a denominator was zero
};

RatioReport ratios(const pipeline::DebateSummary& debate_summary,
                   const std::vector<pipeline::StructuredSummary>& intervention_summaries,
                   const std::vector<pipeline::ReconstructionOutput>& reconstructions);

}  // namespace dbb::metrics
