#include "bicameral/checksum.hpp"

#include <bit>
#include <cstring>

namespace bicameral {

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t state) {
  for (unsigned char b : bytes) {
    state ^= b;
    state *= kFnvPrime;
  }
  return state;
}

std::uint64_t checksum_values(std::span<const double> values, std::uint64_t state) {
  unsigned char buf[8];
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    state = fnv1a64(buf, state);
  }
  return state;
}

std::uint64_t parameter_checksum(const NamedTensors& params) {
  std::uint64_t state = kFnvOffset;
  for (const auto& [name, t] : params) state = checksum_values(t.data(), state);
  return state;
}

}  // namespace bicameral
