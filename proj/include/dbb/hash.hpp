#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dbb::hash {

// Hex-encoded SHA-256; used for cache keys and config hashes.
std::string sha256_hex(std::string_view data);

// FNV-1a 64-bit; stable across platforms, used to seed deterministic RNGs.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace dbb::hash
