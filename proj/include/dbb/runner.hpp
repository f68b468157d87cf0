#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dbb/bias.hpp"
#include "dbb/corpus.hpp"
#include "dbb/gateway.hpp"
#include "dbb/metrics.hpp"
#include "dbb/pipeline.hpp"
#include "dbb/scores.hpp"

namespace dbb::runner {

struct EmbeddingConfig {
  std::string kind = "deterministic-stub";  // or "remote-embedding-endpoint"
  int dimension = 256;
  std::string seed_salt;
  std::string base_url;
  std::string api_path = "/v1/embeddings";
  std::string model_name;
  std::optional<double> baseline;  // rescaling baseline b, off by default
};

struct RegressionConfig {
  int max_iter = 500;
  double grad_tol = 1e-6;
  int min_rows_per_param = 10;
  int min_party_obs = 5;
};

struct RunConfig {
  std::string run_id;
  std::filesystem::path corpus_path;
  int cap = corpus::kDefaultInterventionCap;
  int sample_n = 0;           // 0 = use every debate
  std::uint64_t sample_seed = 0;
  std::filesystem::path runs_dir = "runs";
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path prompts_dir = "prompts";
  std::vector<pipeline::Method> methods;
  std::map<std::string, gateway::BackendConfig> backends;
  std::string summariser_role;
  std::string generator_role;
  std::string reconstructor_role;
  EmbeddingConfig embedding;
  RegressionConfig regression;
  int concurrency = 4;  // stage worker pool bound
};

// Parses and validates the TOML config; enforces the evaluator-exclusion
// rule (reconstructor backend != generator backend when both are live).
RunConfig load_config(const std::filesystem::path& toml_path);
void validate_config(const RunConfig& config);

// Hash over everything that shapes the artifacts: corpus content, prompt
// templates, backends, roles, methods, embedding and regression settings.
std::string config_hash(const RunConfig& config, const pipeline::PromptTemplates& templates);

struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path config_copy() const { return root / "config.json"; }
  std::filesystem::path debates() const { return root / "debates.jsonl"; }
  std::filesystem::path intervention(const std::string& debate, int k) const {
    return root / "interventions" / debate / (std::to_string(k) + ".json");
  }
  std::filesystem::path summary(pipeline::Method m, const std::string& debate) const {
    return root / "summaries" / pipeline::method_name(m) / (debate + ".json");
  }
  std::filesystem::path reconstruction(pipeline::Method m, const std::string& debate,
                                       int k) const {
    return root / "reconstructions" / pipeline::method_name(m) / debate /
           (std::to_string(k) + ".json");
  }
  std::filesystem::path scores_csv() const { return root / "scores.csv"; }
  std::filesystem::path ratios_csv() const { return root / "ratios.csv"; }
  std::filesystem::path analysis_dir() const { return root / "analysis"; }
  std::filesystem::path report_dir() const { return root / "report"; }
  std::filesystem::path validation_dir() const { return root / "validation"; }
};

struct StageStatus {
  bool done = false;
  long count = 0;
  long finished_at = 0;  // unix seconds
};

// Stage bookkeeping; stages only ever advance and completed counts must match
// the artifacts on disk. Persisted atomically (write-temp-then-rename).
struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::map<std::string, StageStatus> stages;

  bool stage_done(const std::string& name) const;
  void mark_done(const std::string& name, long count);

  static RunManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Test seam: invoked after every artifact write; throwing simulates a crash
// mid-stage (the manifest and completed artifacts stay behind for resume).
struct RunHooks {
  std::function<void(const std::string& artifact)> on_artifact;
};

struct ValidationReport {
  std::vector<std::string> backends;
  int interventions = 0;
  std::vector<std::vector<double>> pearson;         // square, unit diagonal
  std::map<std::string, double> mean_precision;     // backend -> P_BERT vs D
  std::uint64_t seed = 0;
  std::vector<std::string> sampled;                 // "<debate>/<method>"
};

class Runner {
 public:
  explicit Runner(RunConfig config);

  // ingest -> summarise -> generate (per method) -> reconstruct -> score ->
  // analyse. Idempotent: completed stages are skipped via the manifest.
  void run_all(const RunHooks& hooks = {});

  void stage_ingest();
  void stage_summarise(const RunHooks& hooks = {});
  void stage_generate(pipeline::Method method, const RunHooks& hooks = {});
  void stage_reconstruct(pipeline::Method method, const RunHooks& hooks = {});
  void stage_score();
  void stage_analyse();

  void cmd_score();    // refuses when reconstructions are incomplete
  void cmd_analyse();  // refuses when not scored
  void cmd_report();   // refuses when not scored
  ValidationReport cmd_validate_reconstructor(const std::vector<std::string>& backend_names,
                                              int sample_n, std::uint64_t seed);

  const RunConfig& config() const { return config_; }
  const RunPaths& paths() const { return paths_; }
  const gateway::Counters& counters(const std::string& backend_name);
  gateway::ChatClient& client(const std::string& backend_name);

 private:
  void ensure_run_dir();
  RunManifest load_or_init_manifest();
  void save_manifest(const RunManifest& manifest);
  std::vector<corpus::Debate> load_run_debates();
  std::vector<pipeline::StructuredSummary> load_intervention_summaries(
      const corpus::Debate& debate);
  std::unique_ptr<metrics::EmbeddingProvider> make_embedding_provider() const;

  RunConfig config_;
  RunPaths paths_;
  pipeline::PromptTemplates templates_;
  std::string config_hash_;
  std::unique_ptr<pipeline::Pipeline> pipeline_;
  std::map<std::string, std::unique_ptr<gateway::Gateway>> gateways_;
  std::mutex gateway_mutex_;
};

enum class AnalysisSelect { both, order_only, party_only };

// Report emission, shared by the analyse stage and `dbb report`. Returns the
// number of analysis files written.
long write_analysis_outputs(const RunPaths& paths, const RunConfig& config,
                            const std::vector<scores::ScoreRow>& rows,
                            AnalysisSelect select = AnalysisSelect::both);
void write_report_outputs(const RunPaths& paths, const std::vector<scores::ScoreRow>& rows);

}  // namespace dbb::runner
