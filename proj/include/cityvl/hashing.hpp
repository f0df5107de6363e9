#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cityvl {

// Hex-encoded SHA-256, used for request keys and content-addressed stage
// digests.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file_hex(const std::string& path);

// splitmix64: seeds the deterministic stand-in feature streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xffULL;
    h *= 1099511628211ULL;
  }
  return h;
}

// Uniform double in [-1, 1), exact function of the generator state.
inline double unit_double(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) *
             (1.0 / 4503599627370496.0) -
         1.0;
}

}  // namespace cityvl
