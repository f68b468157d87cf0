#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

namespace dbb::gateway {

enum class BackendKind { http_chat, mock };

std::string backend_kind_name(BackendKind kind);
BackendKind backend_kind_from_name(const std::string& name);

struct BackendConfig {
  std::string name;        // config section name; also the cache subdirectory
  BackendKind kind = BackendKind::mock;
  std::string base_url;    // http-chat only
  std::string api_path = "/v1/chat/completions";
  std::string model_name;
  double temperature = 0.0;  // 0 by default, for reproducibility
  int max_output_tokens = 1024;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  int concurrency = 4;     // in-flight request bound
  std::chrono::milliseconds backoff{250};
};

void validate(const BackendConfig& config);

// API keys come from the environment, never the config file:
// DBB_API_KEY_<NAME> with the backend name uppercased.
std::string api_key_env_name(const std::string& backend_name);

enum class ReplySchema { free_text, structured_summary };

struct CompletionRequest {
  std::string system_prompt;
  std::string user_prompt;
  ReplySchema schema = ReplySchema::free_text;
};

// Cache key: pure function of (model name, prompts, temperature).
std::string request_hash(const BackendConfig& config, const CompletionRequest& request);

struct CompletionResult {
  std::string text;
  std::string backend;  // model name
  bool cached = false;
  std::chrono::milliseconds latency{0};
};

struct Counters {
  std::atomic<long> live_calls{0};
  std::atomic<long> cache_hits{0};
  std::atomic<long> retries{0};
  std::atomic<long> failures{0};
};

// Seam between the pipeline and any completion source; tests script it.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual const BackendConfig& config() const = 0;
};

// Deterministic offline reply, pure in the request hash. Structured-summary
// requests get all six headings with filler that embeds the speaker name and
// stable content tokens; generator requests get attributed prose the
// reconstructor path can mine. Exposed for direct testing.
std::string mock_structured_reply(const CompletionRequest& request,
                                  const std::string& request_hash);

// Chat-completion client with an on-disk content-addressed cache, bounded
// in-flight requests and retry-with-backoff on transient failures. Safe for
// concurrent use; writers are serialized per cache key.
class Gateway final : public ChatClient {
 public:
  Gateway(BackendConfig config, std::filesystem::path cache_root);
  ~Gateway() override;

  CompletionResult complete(const CompletionRequest& request) override;
  const BackendConfig& config() const override { return config_; }
  const Counters& counters() const { return counters_; }

 private:
  std::filesystem::path cache_path(const std::string& hash) const;
  std::mutex& key_mutex(const std::string& hash);
  std::optional<std::string> cache_lookup(const std::string& hash) const;
  void cache_store(const std::string& hash, const CompletionRequest& request,
                   const std::string& text) const;
  std::string complete_http(const CompletionRequest& request);

  BackendConfig config_;
  std::filesystem::path cache_root_;
  std::unique_ptr<std::counting_semaphore<256>> slots_;
  Counters counters_;

  static constexpr size_t kKeyMutexes = 64;
  std::mutex key_mutexes_[kKeyMutexes];
};

}  // namespace dbb::gateway
