#pragma once

#include <atomic>
#include <map>
#include <string>

namespace dbb::http {

struct Endpoint {
  std::string host;
  int port = 80;
};

// Accepts "http://host[:port]" or "host[:port]". HTTPS is out of scope for
// the self-hosted endpoints this tool targets.
Endpoint parse_base_url(const std::string& base_url);

struct PostOptions {
  int timeout_ms = 30000;
  int max_retries = 3;
  int backoff_ms = 250;  // doubled per attempt
};

// POSTs a JSON body; retries connection errors, 429 and 5xx responses with
// exponential backoff. Throws TransportError once retries are exhausted.
// `retries_out`, when given, is incremented once per retry performed.
std::string post_json(const std::string& base_url, const std::string& path,
                      const std::map<std::string, std::string>& headers,
                      const std::string& body, const PostOptions& options,
                      std::atomic<long>* retries_out = nullptr);

}  // namespace dbb::http
