#pragma once

#include <cstdint>
#include <span>

#include "bicameral/attention.hpp"

namespace bicameral {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a, chainable through `state`.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t state = kFnvOffset);

// FNV-1a over the little-endian bytes of every value, in order.
std::uint64_t checksum_values(std::span<const double> values, std::uint64_t state = kFnvOffset);

std::uint64_t parameter_checksum(const NamedTensors& params);

}  // namespace bicameral
