#pragma once

#include <stdexcept>
#include <string>

namespace dbb {

// Error taxonomy shared across modules. The CLI maps these onto exit codes:
// ConfigError -> 2, StageError -> 3, RefusedError -> 4, everything else -> 3.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Transport-level failure after retries are exhausted; carries last status.
struct TransportError : std::runtime_error {
  int last_status = 0;
  TransportError(const std::string& msg, int status)
      : std::runtime_error(msg), last_status(status) {}
};

// Well-formed transport, malformed payload (e.g. empty model output).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition not met for a command (unscored run, too few samples, ...).
struct RefusedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dbb
