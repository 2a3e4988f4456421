#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mmrag {

// SHA-256 digest rendered as 64 lowercase hex digits. Used for synthetic
// document ids and for keying prompt fixtures and the filter cache.
std::string sha256_hex(std::string_view data);

// FNV-1a 64-bit. Stable across platforms; feeds the hash embedder.
std::uint64_t fnv1a64(std::string_view data);

} // namespace mmrag
