#include "dbb/runner.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dbb/errors.hpp"
#include "dbb/fsutil.hpp"
#include "dbb/hash.hpp"
#include "dbb/log.hpp"
#include "dbb/parallel.hpp"
#include "dbb/toml_lite.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace dbb::runner {

namespace {

long now_seconds() {
  return static_cast<long>(std::chrono::duration_cast<std::chrono::seconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count());
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seeded Fisher-Yates prefix selection; deterministic across platforms.
template <typename T>
void seeded_sample_prefix(std::vector<T>& items, size_t take, std::uint64_t seed) {
  std::uint64_t state = seed;
  for (size_t i = 0; i < take && i + 1 < items.size(); ++i) {
    size_t j = i + static_cast<size_t>(splitmix64(state) % (items.size() - i));
    std::swap(items[i], items[j]);
  }
  if (take < items.size()) items.resize(take);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

RunConfig load_config(const fs::path& toml_path) {
  toml::Table t = toml::parse_file(toml_path.string());
  RunConfig c;
  c.run_id = t.get_string_or("run_id", "");
  c.runs_dir = t.get_string_or("runs_dir", "runs");
  c.cache_dir = t.get_string_or("cache_dir", "cache");
  c.prompts_dir = t.get_string_or("prompts_dir", "prompts");

  c.corpus_path = t.get_string_or("corpus.path", "");
  c.cap = static_cast<int>(t.get_int_or("corpus.cap", corpus::kDefaultInterventionCap));
  c.sample_n = static_cast<int>(t.get_int_or("corpus.sample_n", 0));
  c.sample_seed = static_cast<std::uint64_t>(t.get_int_or("corpus.sample_seed", 0));

  auto method_names = t.get_string_array("methods");
  if (method_names.empty())
    method_names = {"default", "grouped", "hierarchical", "prompted"};
  for (const auto& name : method_names)
    c.methods.push_back(pipeline::method_from_name(name));

  for (const auto& name : t.subsections("backends")) {
    std::string prefix = "backends." + name + ".";
    gateway::BackendConfig b;
    b.name = name;
    b.kind = gateway::backend_kind_from_name(t.get_string_or(prefix + "kind", "mock"));
    b.base_url = t.get_string_or(prefix + "base_url", "");
    b.api_path = t.get_string_or(prefix + "api_path", "/v1/chat/completions");
    b.model_name = t.get_string_or(prefix + "model", "");
    b.temperature = t.get_double_or(prefix + "temperature", 0.0);
    b.max_output_tokens = static_cast<int>(t.get_int_or(prefix + "max_output_tokens", 1024));
    b.timeout = std::chrono::milliseconds(
        static_cast<long>(t.get_double_or(prefix + "timeout_s", 30.0) * 1000.0));
    b.max_retries = static_cast<int>(t.get_int_or(prefix + "max_retries", 3));
    b.concurrency = static_cast<int>(t.get_int_or(prefix + "concurrency", 4));
    b.backoff = std::chrono::milliseconds(t.get_int_or(prefix + "backoff_ms", 250));
    c.backends.emplace(name, std::move(b));
  }

  c.summariser_role = t.get_string_or("roles.summariser", "");
  c.generator_role = t.get_string_or("roles.generator", "");
  c.reconstructor_role = t.get_string_or("roles.reconstructor", "");

  c.embedding.kind = t.get_string_or("embedding.kind", "deterministic-stub");
  c.embedding.dimension = static_cast<int>(t.get_int_or("embedding.dimension", 256));
  c.embedding.seed_salt = t.get_string_or("embedding.seed_salt", "");
  c.embedding.base_url = t.get_string_or("embedding.base_url", "");
  c.embedding.api_path = t.get_string_or("embedding.api_path", "/v1/embeddings");
  c.embedding.model_name = t.get_string_or("embedding.model", "");
  if (t.has("embedding.baseline"))
    c.embedding.baseline = t.get_double_or("embedding.baseline", 0.0);

  c.regression.max_iter = static_cast<int>(t.get_int_or("regression.max_iter", 500));
  c.regression.grad_tol = t.get_double_or("regression.grad_tol", 1e-6);
  c.regression.min_rows_per_param =
      static_cast<int>(t.get_int_or("regression.min_rows_per_param", 10));
  c.regression.min_party_obs = static_cast<int>(t.get_int_or("regression.min_party_obs", 5));

  c.concurrency = static_cast<int>(t.get_int_or("limits.concurrency", 4));

  validate_config(c);
  return c;
}

void validate_config(const RunConfig& c) {
  if (c.run_id.empty()) throw ConfigError("run_id is required");
  if (c.run_id.find('/') != std::string::npos || c.run_id.find("..") != std::string::npos)
    throw ConfigError("run_id must be a plain directory name");
  if (c.corpus_path.empty()) throw ConfigError("corpus.path is required");
  if (c.cap < 1) throw ConfigError("corpus.cap must be >= 1");
  if (c.methods.empty()) throw ConfigError("methods must be non-empty");
  std::set<pipeline::Method> dedup(c.methods.begin(), c.methods.end());
  if (dedup.size() != c.methods.size()) throw ConfigError("methods contains duplicates");
  if (c.backends.empty()) throw ConfigError("at least one [backends.<name>] section required");
  for (const auto& [name, backend] : c.backends) gateway::validate(backend);

  auto require_role = [&](const std::string& role, const std::string& value) {
    if (value.empty()) throw ConfigError("roles." + role + " is required");
    if (!c.backends.count(value))
      throw ConfigError("roles." + role + " refers to unknown backend '" + value + "'");
  };
  require_role("summariser", c.summariser_role);
  require_role("generator", c.generator_role);
  require_role("reconstructor", c.reconstructor_role);

  // Evaluator exclusion: the reconstructor must not be the generator when
  // both are live endpoints.
  const auto& gen = c.backends.at(c.generator_role);
  const auto& rec = c.backends.at(c.reconstructor_role);
  if (gen.kind == gateway::BackendKind::http_chat &&
      rec.kind == gateway::BackendKind::http_chat) {
    bool same_identity = c.generator_role == c.reconstructor_role ||
                         (gen.base_url == rec.base_url && gen.model_name == rec.model_name);
    if (same_identity)
      throw ConfigError(
          "reconstructor backend must differ from the generator backend when both are live "
          "endpoints");
  }

  if (c.embedding.kind != "deterministic-stub" &&
      c.embedding.kind != "remote-embedding-endpoint")
    throw ConfigError("embedding.kind must be deterministic-stub or remote-embedding-endpoint");
  if (c.embedding.kind == "remote-embedding-endpoint" && c.embedding.base_url.empty())
    throw ConfigError("embedding.base_url required for remote-embedding-endpoint");
  if (c.embedding.dimension < 2) throw ConfigError("embedding.dimension must be >= 2");
  if (c.embedding.baseline && *c.embedding.baseline >= 1.0)
    throw ConfigError("embedding.baseline must be < 1");
  if (c.concurrency < 1) throw ConfigError("limits.concurrency must be >= 1");
}

std::string config_hash(const RunConfig& c, const pipeline::PromptTemplates& templates) {
  std::ostringstream m;
  m << "corpus_sha=" << hash::sha256_hex(fsutil::read_file(c.corpus_path)) << "\n";
  m << "cap=" << c.cap << " sample_n=" << c.sample_n << " sample_seed=" << c.sample_seed
    << "\n";
  m << "methods=";
  for (auto method : c.methods) m << pipeline::method_name(method) << ",";
  m << "\n";
  for (const auto& [name, b] : c.backends) {
    m << "backend." << name << "={" << gateway::backend_kind_name(b.kind) << "," << b.base_url
      << "," << b.api_path << "," << b.model_name << "," << fmt_g(b.temperature) << ","
      << b.max_output_tokens << "}\n";
  }
  m << "roles={" << c.summariser_role << "," << c.generator_role << ","
    << c.reconstructor_role << "}\n";
  m << "embedding={" << c.embedding.kind << "," << c.embedding.dimension << ","
    << c.embedding.seed_salt << "," << c.embedding.base_url << "," << c.embedding.api_path
    << "," << c.embedding.model_name << ","
    << (c.embedding.baseline ? fmt_g(*c.embedding.baseline) : "none") << "}\n";
  m << "regression={" << c.regression.max_iter << "," << fmt_g(c.regression.grad_tol) << ","
    << c.regression.min_rows_per_param << "," << c.regression.min_party_obs << "}\n";
  m << "prompts=" << templates.digest() << "\n";
  return hash::sha256_hex(m.str());
}

bool RunManifest::stage_done(const std::string& name) const {
  auto it = stages.find(name);
  return it != stages.end() && it->second.done;
}

void RunManifest::mark_done(const std::string& name, long count) {
  auto& s = stages[name];
  if (s.done) return;  // stages only advance
  s.done = true;
  s.count = count;
  s.finished_at = now_seconds();
}

RunManifest RunManifest::load(const fs::path& path) {
  json j = json::parse(fsutil::read_file(path));
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.config_hash = j.value("config_hash", "");
  if (j.contains("stages")) {
    for (auto& [name, s] : j["stages"].items()) {
      StageStatus st;
      st.done = s.value("done", false);
      st.count = s.value("count", 0L);
      st.finished_at = s.value("finished_at", 0L);
      m.stages[name] = st;
    }
  }
  return m;
}

void RunManifest::save(const fs::path& path) const {
  json j;
  j["run_id"] = run_id;
  j["config_hash"] = config_hash;
  j["stages"] = json::object();
  for (const auto& [name, s] : stages) {
    j["stages"][name] = {{"done", s.done}, {"count", s.count}, {"finished_at", s.finished_at}};
  }
  fsutil::write_file_atomic(path, j.dump(2));
}

Runner::Runner(RunConfig config) : config_(std::move(config)) {
  validate_config(config_);
  paths_.root = config_.runs_dir / config_.run_id;
  templates_ = pipeline::PromptTemplates::load(config_.prompts_dir);
  config_hash_ = config_hash(config_, templates_);
  pipeline_ = std::make_unique<pipeline::Pipeline>(templates_);
}

gateway::ChatClient& Runner::client(const std::string& backend_name) {
  std::lock_guard<std::mutex> lock(gateway_mutex_);
  auto it = gateways_.find(backend_name);
  if (it == gateways_.end()) {
    auto cfg = config_.backends.find(backend_name);
    if (cfg == config_.backends.end())
      throw ConfigError("unknown backend '" + backend_name + "'");
    it = gateways_
             .emplace(backend_name,
                      std::make_unique<gateway::Gateway>(cfg->second, config_.cache_dir))
             .first;
  }
  return *it->second;
}

const gateway::Counters& Runner::counters(const std::string& backend_name) {
  return static_cast<gateway::Gateway&>(client(backend_name)).counters();
}

void Runner::ensure_run_dir() {
  fs::create_directories(paths_.root);
  json j;
  j["run_id"] = config_.run_id;
  j["config_hash"] = config_hash_;
  j["cap"] = config_.cap;
  j["sample_n"] = config_.sample_n;
  j["sample_seed"] = config_.sample_seed;
  j["methods"] = json::array();
  for (auto m : config_.methods) j["methods"].push_back(pipeline::method_name(m));
  j["roles"] = {{"summariser", config_.summariser_role},
                {"generator", config_.generator_role},
                {"reconstructor", config_.reconstructor_role}};
  j["backends"] = json::object();
  for (const auto& [name, b] : config_.backends) {
    j["backends"][name] = {{"kind", gateway::backend_kind_name(b.kind)},
                           {"base_url", b.base_url},
                           {"api_path", b.api_path},
                           {"model", b.model_name},
                           {"temperature", b.temperature},
                           {"max_output_tokens", b.max_output_tokens}};
  }
  j["embedding"] = {{"kind", config_.embedding.kind},
                    {"dimension", config_.embedding.dimension},
                    {"seed_salt", config_.embedding.seed_salt}};
  j["prompts_digest"] = templates_.digest();
  fsutil::write_file_atomic(paths_.config_copy(), j.dump(2));
}

RunManifest Runner::load_or_init_manifest() {
  if (fsutil::exists(paths_.manifest())) {
    RunManifest m = RunManifest::load(paths_.manifest());
    if (m.config_hash != config_hash_)
      throw RefusedError("run '" + config_.run_id +
                         "' was produced by a different configuration (config hash mismatch); "
                         "use a fresh run_id or restore the original config/prompts");
    return m;
  }
  RunManifest m;
  m.run_id = config_.run_id;
  m.config_hash = config_hash_;
  return m;
}

void Runner::save_manifest(const RunManifest& manifest) {
  manifest.save(paths_.manifest());
}

std::vector<corpus::Debate> Runner::load_run_debates() {
  if (!fsutil::exists(paths_.debates()))
    throw StageError("run has no ingested corpus snapshot; run ingest first");
  return corpus::ingest_debates(paths_.debates(), config_.cap);
}

std::vector<pipeline::StructuredSummary> Runner::load_intervention_summaries(
    const corpus::Debate& debate) {
  std::vector<pipeline::StructuredSummary> out;
  out.reserve(static_cast<size_t>(debate.n()));
  for (const auto& iv : debate.interventions) {
    auto path = paths_.intervention(debate.debate_id, iv.order_index);
    if (!fsutil::exists(path))
      throw StageError("missing intervention summary artifact: " + path.string());
    out.push_back(pipeline::summary_from_json(fsutil::read_file(path)));
  }
  return out;
}

std::unique_ptr<metrics::EmbeddingProvider> Runner::make_embedding_provider() const {
  if (config_.embedding.kind == "deterministic-stub") {
    return std::make_unique<metrics::StubEmbeddingProvider>(config_.embedding.dimension,
                                                            config_.embedding.seed_salt);
  }
  metrics::RemoteEmbeddingConfig rc;
  rc.base_url = config_.embedding.base_url;
  rc.api_path = config_.embedding.api_path;
  rc.model_name = config_.embedding.model_name;
  return std::make_unique<metrics::RemoteEmbeddingProvider>(rc, config_.embedding.dimension);
}

void Runner::stage_ingest() {
  ensure_run_dir();
  RunManifest manifest = load_or_init_manifest();
  if (manifest.stage_done("ingested")) return;

  auto debates = corpus::ingest_debates(config_.corpus_path, config_.cap);
  if (debates.empty()) throw StageError("corpus contains no debates");
  std::sort(debates.begin(), debates.end(),
            [](const corpus::Debate& a, const corpus::Debate& b) {
              return a.debate_id < b.debate_id;
            });
  if (config_.sample_n > 0 && static_cast<size_t>(config_.sample_n) < debates.size()) {
    seeded_sample_prefix(debates, static_cast<size_t>(config_.sample_n), config_.sample_seed);
    std::sort(debates.begin(), debates.end(),
              [](const corpus::Debate& a, const corpus::Debate& b) {
                return a.debate_id < b.debate_id;
              });
    log::info("sampled " + std::to_string(debates.size()) + " debates (seed " +
              std::to_string(config_.sample_seed) + ")");
  }
  corpus::write_debates(paths_.debates(), debates);
  manifest.mark_done("ingested", static_cast<long>(debates.size()));
  save_manifest(manifest);
}

void Runner::stage_summarise(const RunHooks& hooks) {
  RunManifest manifest = load_or_init_manifest();
  if (manifest.stage_done("summarised")) return;

  auto debates = load_run_debates();
  struct Item {
    const corpus::Debate* debate;
    const corpus::Intervention* intervention;
  };
  std::vector<Item> items;
  for (const auto& d : debates)
    for (const auto& iv : d.interventions) items.push_back({&d, &iv});

  auto& summariser = client(config_.summariser_role);
  parallel::for_each_index(items.size(), config_.concurrency, [&](size_t i) {
    const auto& item = items[i];
    auto path = paths_.intervention(item.debate->debate_id, item.intervention->order_index);
    if (fsutil::exists(path)) return;
    auto summary = pipeline_->summarise_intervention(*item.debate, *item.intervention,
                                                     summariser);
    fsutil::write_file_atomic(path, pipeline::summary_to_json(summary));
    if (hooks.on_artifact) hooks.on_artifact(path.string());
  });

  manifest.mark_done("summarised", static_cast<long>(items.size()));
  save_manifest(manifest);
}

void Runner::stage_generate(pipeline::Method method, const RunHooks& hooks) {
  const std::string stage = "generated_" + pipeline::method_name(method);
  RunManifest manifest = load_or_init_manifest();
  if (manifest.stage_done(stage)) return;

  auto debates = load_run_debates();
  auto& generator = client(config_.generator_role);
  parallel::for_each_index(debates.size(), config_.concurrency, [&](size_t i) {
    const auto& debate = debates[i];
    auto path = paths_.summary(method, debate.debate_id);
    if (fsutil::exists(path)) return;
    auto summaries = load_intervention_summaries(debate);
    auto ds = pipeline_->generate(method, debate, summaries, generator);
    fsutil::write_file_atomic(path, pipeline::debate_summary_to_json(ds));
    if (hooks.on_artifact) hooks.on_artifact(path.string());
  });

  manifest.mark_done(stage, static_cast<long>(debates.size()));
  save_manifest(manifest);
}

void Runner::stage_reconstruct(pipeline::Method method, const RunHooks& hooks) {
  const std::string stage = "reconstructed_" + pipeline::method_name(method);
  RunManifest manifest = load_or_init_manifest();
  if (manifest.stage_done(stage)) return;

  auto debates = load_run_debates();
  struct Item {
    const corpus::Debate* debate;
    const corpus::Intervention* intervention;
    const pipeline::DebateSummary* summary;
  };
  std::vector<pipeline::DebateSummary> summaries;
  summaries.reserve(debates.size());
  for (const auto& d : debates) {
    auto path = paths_.summary(method, d.debate_id);
    if (!fsutil::exists(path))
      throw StageError("missing debate summary artifact: " + path.string());
    summaries.push_back(pipeline::debate_summary_from_json(fsutil::read_file(path)));
  }
  std::vector<Item> items;
  for (size_t d = 0; d < debates.size(); ++d)
    for (const auto& iv : debates[d].interventions)
      items.push_back({&debates[d], &iv, &summaries[d]});

  auto& reconstructor = client(config_.reconstructor_role);
  parallel::for_each_index(items.size(), config_.concurrency, [&](size_t i) {
    const auto& item = items[i];
    auto path = paths_.reconstruction(method, item.debate->debate_id,
                                      item.intervention->order_index);
    if (fsutil::exists(path)) return;
    auto rec = pipeline_->reconstruct_intervention(*item.summary, item.intervention->speaker,
                                                   reconstructor);
    rec.structured.order_index = item.intervention->order_index;
    fsutil::write_file_atomic(path, pipeline::reconstruction_to_json(rec));
    if (hooks.on_artifact) hooks.on_artifact(path.string());
  });

  manifest.mark_done(stage, static_cast<long>(items.size()));
  save_manifest(manifest);
}

void Runner::stage_score() {
  RunManifest manifest = load_or_init_manifest();
  if (manifest.stage_done("scored")) return;

  auto debates = load_run_debates();
  auto provider = make_embedding_provider();
  metrics::ScoreOptions score_opts;
  score_opts.baseline = config_.embedding.baseline;

  std::vector<scores::ScoreRow> rows;
  std::string ratio_lines =
      "debate_id,method,model,tokens_summary,tokens_source,tokens_reconstructed,C,Dr\n";

  for (const auto& debate : debates) {
    auto originals = load_intervention_summaries(debate);
    for (auto method : pipeline::kAllMethods) {
      if (std::find(config_.methods.begin(), config_.methods.end(), method) ==
          config_.methods.end())
        continue;
      auto spath = paths_.summary(method, debate.debate_id);
      if (!fsutil::exists(spath))
        throw StageError("missing debate summary artifact: " + spath.string());
      auto ds = pipeline::debate_summary_from_json(fsutil::read_file(spath));

      std::vector<pipeline::ReconstructionOutput> recs;
      recs.reserve(static_cast<size_t>(debate.n()));
      for (const auto& iv : debate.interventions) {
        auto rpath = paths_.reconstruction(method, debate.debate_id, iv.order_index);
        if (!fsutil::exists(rpath))
          throw StageError("missing reconstruction artifact: " + rpath.string());
        recs.push_back(pipeline::reconstruction_from_json(fsutil::read_file(rpath)));
      }

      auto ratio = metrics::ratios(ds, originals, recs);
      ratio_lines += debate.debate_id + "," + pipeline::method_name(method) + "," +
                     ds.backend + "," + std::to_string(ratio.tokens_summary) + "," +
                     std::to_string(ratio.tokens_source) + "," +
                     std::to_string(ratio.tokens_reconstructed) + "," +
                     scores::format_double(ratio.compression_ratio) + "," +
                     scores::format_double(ratio.decompression_ratio) + "\n";

      for (size_t i = 0; i < originals.size(); ++i) {
        const auto& iv = debate.interventions[i];
        scores::ScoreRow row;
        row.debate_id = debate.debate_id;
        row.method = method;
        row.model = ds.backend;
        row.order_k = iv.order_index;
        row.n = debate.n();
        row.relative_order = corpus::relative_order(iv.order_index, debate.n()).x;
        row.party_group = iv.speaker.party_group;
        row.speaker_id = iv.speaker.speaker_id;
        row.found = recs[i].found;
        if (!originals[i].failed && !recs[i].structured.failed) {
          auto score =
              metrics::intervention_fidelity(originals[i], recs[i].structured, *provider,
                                             score_opts);
          row.precision = score.precision;
          row.recall = score.recall;
          row.f1 = score.f1;
        }
        rows.push_back(std::move(row));
      }
    }
  }

  scores::write_scores_csv(paths_.scores_csv(), rows);
  fsutil::write_file_atomic(paths_.ratios_csv(), ratio_lines);
  manifest.mark_done("scored", static_cast<long>(rows.size()));
  save_manifest(manifest);
}

void Runner::stage_analyse() {
  RunManifest manifest = load_or_init_manifest();
  if (manifest.stage_done("analysed")) return;

  auto rows = scores::read_scores_csv(paths_.scores_csv());
  long fits = write_analysis_outputs(paths_, config_, rows);
  manifest.mark_done("analysed", fits);
  save_manifest(manifest);
}

void Runner::run_all(const RunHooks& hooks) {
  stage_ingest();
  stage_summarise(hooks);
  for (auto method : pipeline::kAllMethods) {
    if (std::find(config_.methods.begin(), config_.methods.end(), method) !=
        config_.methods.end())
      stage_generate(method, hooks);
  }
  for (auto method : pipeline::kAllMethods) {
    if (std::find(config_.methods.begin(), config_.methods.end(), method) !=
        config_.methods.end())
      stage_reconstruct(method, hooks);
  }
  stage_score();
  stage_analyse();
  auto rows = scores::read_scores_csv(paths_.scores_csv());
  write_report_outputs(paths_, rows);
}

void Runner::cmd_score() {
  RunManifest manifest = load_or_init_manifest();
  for (auto method : config_.methods) {
    if (!manifest.stage_done("reconstructed_" + pipeline::method_name(method)))
      throw RefusedError("run is not fully reconstructed; cannot score");
  }
  stage_score();
}

void Runner::cmd_analyse() {
  RunManifest manifest = load_or_init_manifest();
  if (!manifest.stage_done("scored"))
    throw RefusedError("run is not scored; cannot analyse");
  stage_analyse();
}

void Runner::cmd_report() {
  RunManifest manifest = load_or_init_manifest();
  if (!manifest.stage_done("scored"))
    throw RefusedError("run is not scored; refusing to report");
  auto rows = scores::read_scores_csv(paths_.scores_csv());
  write_report_outputs(paths_, rows);
}

ValidationReport Runner::cmd_validate_reconstructor(
    const std::vector<std::string>& backend_names, int sample_n, std::uint64_t seed) {
  if (backend_names.size() < 2)
    throw RefusedError("validate-reconstructor needs at least 2 backends");
  for (const auto& name : backend_names) {
    if (!config_.backends.count(name))
      throw ConfigError("validate-reconstructor: unknown backend '" + name + "'");
  }
  RunManifest manifest = load_or_init_manifest();
  if (!manifest.stage_done("summarised"))
    throw RefusedError("run is not summarised; nothing to validate against");

  auto debates = load_run_debates();
  std::map<std::string, const corpus::Debate*> debates_by_id;
  for (const auto& d : debates) debates_by_id[d.debate_id] = &d;

  // Sample (debate, method) summaries, mirroring the sample-of-debate-reports
  // validation design.
  struct Pair {
    std::string debate_id;
    pipeline::Method method;
  };
  std::vector<Pair> pairs;
  for (const auto& d : debates) {
    for (auto method : pipeline::kAllMethods) {
      if (std::find(config_.methods.begin(), config_.methods.end(), method) ==
          config_.methods.end())
        continue;
      if (fsutil::exists(paths_.summary(method, d.debate_id)))
        pairs.push_back({d.debate_id, method});
    }
  }
  if (pairs.empty()) throw RefusedError("no debate summaries available to validate");
  if (sample_n > 0 && static_cast<size_t>(sample_n) < pairs.size())
    seeded_sample_prefix(pairs, static_cast<size_t>(sample_n), seed);

  ValidationReport report;
  report.backends = backend_names;
  report.seed = seed;

  auto provider = make_embedding_provider();
  std::map<std::string, std::vector<double>> f1_by_backend;
  std::map<std::string, std::vector<double>> precision_by_backend;

  for (const auto& pair : pairs) {
    report.sampled.push_back(pair.debate_id + "/" + pipeline::method_name(pair.method));
    const corpus::Debate& debate = *debates_by_id.at(pair.debate_id);
    auto ds = pipeline::debate_summary_from_json(
        fsutil::read_file(paths_.summary(pair.method, pair.debate_id)));
    auto originals = load_intervention_summaries(debate);

    for (size_t i = 0; i < originals.size(); ++i) {
      if (originals[i].failed) continue;
      const auto& iv = debate.interventions[i];
      for (const auto& name : backend_names) {
        auto rec = pipeline_->reconstruct_intervention(ds, iv.speaker, client(name));
        auto score = metrics::intervention_fidelity(originals[i], rec.structured, *provider);
        f1_by_backend[name].push_back(score.f1);
        precision_by_backend[name].push_back(
            metrics::bertscore(pipeline::render_summary(rec.structured), ds.text, *provider)
                .precision);
      }
    }
  }

  report.interventions = static_cast<int>(f1_by_backend[backend_names.front()].size());
  if (report.interventions < 3)
    throw RefusedError("fewer than 3 common scored interventions; refusing to validate");

  report.pearson.assign(backend_names.size(),
                        std::vector<double>(backend_names.size(), 1.0));
  for (size_t a = 0; a < backend_names.size(); ++a) {
    for (size_t b = a + 1; b < backend_names.size(); ++b) {
      double r = bias::pearson(f1_by_backend[backend_names[a]],
                               f1_by_backend[backend_names[b]]);
      report.pearson[a][b] = r;
      report.pearson[b][a] = r;
    }
  }
  for (const auto& name : backend_names) {
    const auto& ps = precision_by_backend[name];
    double sum = 0.0;
    for (double p : ps) sum += p;
    report.mean_precision[name] = ps.empty() ? 0.0 : sum / static_cast<double>(ps.size());
  }

  json j;
  j["backends"] = report.backends;
  j["interventions"] = report.interventions;
  j["seed"] = report.seed;
  j["sampled"] = report.sampled;
  j["pearson"] = report.pearson;
  j["mean_precision"] = report.mean_precision;
  fsutil::write_file_atomic(paths_.validation_dir() / "reconstructor.json", j.dump(2));
  return report;
}

}  // namespace dbb::runner
