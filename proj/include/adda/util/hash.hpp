#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace adda {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t state = kFnvOffset);
std::uint64_t fnv1a(std::string_view text, std::uint64_t state = kFnvOffset);

/// splitmix64 of (seed, stream): independent sub-seeds for each component.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace adda
