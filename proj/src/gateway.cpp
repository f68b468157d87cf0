#include "dbb/gateway.hpp"

#include <cctype>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dbb/errors.hpp"
#include "dbb/fsutil.hpp"
#include "dbb/hash.hpp"
#include "dbb/http_util.hpp"
#include "dbb/log.hpp"

using nlohmann::json;

namespace dbb::http {

Endpoint parse_base_url(const std::string& base_url) {
  std::string rest = base_url;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  if (rest.rfind("https://", 0) == 0)
    throw ConfigError("https endpoints are not supported: " + base_url);
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  Endpoint ep;
  size_t colon = rest.rfind(':');
  if (colon == std::string::npos) {
    ep.host = rest;
    ep.port = 80;
  } else {
    ep.host = rest.substr(0, colon);
    try {
      ep.port = std::stoi(rest.substr(colon + 1));
    } catch (const std::logic_error&) {
      throw ConfigError("invalid port in base_url: " + base_url);
    }
  }
  if (ep.host.empty()) throw ConfigError("empty host in base_url: " + base_url);
  return ep;
}

std::string post_json(const std::string& base_url, const std::string& path,
                      const std::map<std::string, std::string>& headers,
                      const std::string& body, const PostOptions& options,
                      std::atomic<long>* retries_out) {
  Endpoint ep = parse_base_url(base_url);
  httplib::Client client(ep.host, ep.port);
  client.set_connection_timeout(options.timeout_ms / 1000, (options.timeout_ms % 1000) * 1000);
  client.set_read_timeout(options.timeout_ms / 1000, (options.timeout_ms % 1000) * 1000);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);

  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    if (attempt > 0) {
      if (retries_out) retries_out->fetch_add(1);
      long delay = static_cast<long>(options.backoff_ms) << (attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    auto res = client.Post(path, h, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "connection failure: " + httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    // Other 4xx are not retryable.
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + base_url + path,
                         res->status);
  }
  throw TransportError("exhausted retries against " + base_url + path + " (" + last_error + ")",
                       last_status);
}

}  // namespace dbb::http

namespace dbb::gateway {

std::string backend_kind_name(BackendKind kind) {
  return kind == BackendKind::http_chat ? "http-chat" : "mock";
}

BackendKind backend_kind_from_name(const std::string& name) {
  if (name == "http-chat") return BackendKind::http_chat;
  if (name == "mock") return BackendKind::mock;
  throw ConfigError("unknown backend kind: " + name);
}

void validate(const BackendConfig& config) {
  if (config.name.empty()) throw ConfigError("backend has no name");
  if (config.model_name.empty())
    throw ConfigError("backend '" + config.name + "' has no model name");
  if (config.temperature < 0.0)
    throw ConfigError("backend '" + config.name + "' has negative temperature");
  if (config.kind == BackendKind::http_chat && config.base_url.empty())
    throw ConfigError("backend '" + config.name + "' is http-chat but has no base_url");
  if (config.kind == BackendKind::mock && !config.base_url.empty())
    throw ConfigError("backend '" + config.name + "' is mock but has a base_url");
  if (config.max_retries < 0 || config.concurrency < 1)
    throw ConfigError("backend '" + config.name + "' has invalid limits");
}

std::string api_key_env_name(const std::string& backend_name) {
  std::string suffix;
  for (char c : backend_name) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      suffix.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    else
      suffix.push_back('_');
  }
  return "DBB_API_KEY_" + suffix;
}

std::string request_hash(const BackendConfig& config, const CompletionRequest& request) {
  char temp[32];
  std::snprintf(temp, sizeof(temp), "%.6g", config.temperature);
  std::string material;
  material += config.model_name;
  material += '\x1f';
  material += request.system_prompt;
  material += '\x1f';
  material += request.user_prompt;
  material += '\x1f';
  material += temp;
  return hash::sha256_hex(material);
}

Gateway::Gateway(BackendConfig config, std::filesystem::path cache_root)
    : config_(std::move(config)), cache_root_(std::move(cache_root)) {
  validate(config_);
  slots_ = std::make_unique<std::counting_semaphore<256>>(config_.concurrency);
}

Gateway::~Gateway() = default;

std::filesystem::path Gateway::cache_path(const std::string& hash) const {
  return cache_root_ / config_.name / hash.substr(0, 2) / (hash + ".json");
}

std::mutex& Gateway::key_mutex(const std::string& hash) {
  // Small striped lock pool; collisions just serialize a little more.
  return key_mutexes_[hash::fnv1a64(hash) % kKeyMutexes];
}

std::optional<std::string> Gateway::cache_lookup(const std::string& hash) const {
  auto path = cache_path(hash);
  if (!fsutil::exists(path)) return std::nullopt;
  json j = json::parse(fsutil::read_file(path), nullptr, false);
  if (j.is_discarded() || !j.contains("response")) {
    log::warn("discarding unreadable cache entry " + path.string());
    return std::nullopt;
  }
  return j["response"].value("text", std::string());
}

void Gateway::cache_store(const std::string& hash, const CompletionRequest& request,
                          const std::string& text) const {
  json j;
  j["request"] = {{"model", config_.model_name},
                  {"system_prompt", request.system_prompt},
                  {"user_prompt", request.user_prompt},
                  {"temperature", config_.temperature},
                  {"schema", request.schema == ReplySchema::structured_summary
                                 ? "structured-summary"
                                 : "free-text"}};
  j["response"] = {{"text", text}};
  j["timestamp"] = static_cast<long>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  fsutil::write_file_atomic(cache_path(hash), j.dump(2));
}

std::string Gateway::complete_http(const CompletionRequest& request) {
  json body;
  body["model"] = config_.model_name;
  body["messages"] = json::array({{{"role", "system"}, {"content", request.system_prompt}},
                                  {{"role", "user"}, {"content", request.user_prompt}}});
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_output_tokens;

  std::map<std::string, std::string> headers;
  std::string env = api_key_env_name(config_.name);
  if (const char* key = std::getenv(env.c_str()); key && *key)
    headers["Authorization"] = std::string("Bearer ") + key;

  http::PostOptions opts;
  opts.timeout_ms = static_cast<int>(config_.timeout.count());
  opts.max_retries = config_.max_retries;
  opts.backoff_ms = static_cast<int>(config_.backoff.count());
  std::string reply =
      http::post_json(config_.base_url, config_.api_path, headers, body.dump(), opts,
                      &counters_.retries);

  json j = json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
    throw ProtocolError("chat endpoint returned malformed payload");
  return j["choices"][0].at("message").value("content", std::string());
}

CompletionResult Gateway::complete(const CompletionRequest& request) {
  std::string hash = request_hash(config_, request);
  auto start = std::chrono::steady_clock::now();

  std::lock_guard<std::mutex> key_lock(key_mutex(hash));
  if (auto cached = cache_lookup(hash)) {
    counters_.cache_hits.fetch_add(1);
    CompletionResult result;
    result.text = *cached;
    result.backend = config_.model_name;
    result.cached = true;
    result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return result;
  }

  slots_->acquire();
  std::string text;
  try {
    counters_.live_calls.fetch_add(1);
    if (config_.kind == BackendKind::mock) {
      text = mock_structured_reply(request, hash);
    } else {
      text = complete_http(request);
    }
  } catch (...) {
    counters_.failures.fetch_add(1);
    slots_->release();
    throw;
  }
  slots_->release();

  if (text.empty()) {
    counters_.failures.fetch_add(1);
    throw ProtocolError("backend '" + config_.name + "' returned empty output");
  }
  cache_store(hash, request, text);

  CompletionResult result;
  result.text = text;
  result.backend = config_.model_name;
  result.cached = false;
  result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return result;
}

}  // namespace dbb::gateway
