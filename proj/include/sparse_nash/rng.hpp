#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sparse_nash {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a stream key from a root seed and a sequence of integer keys.
/// Streams with different key tuples are statistically independent; the same
/// tuple always gives the same stream, regardless of call order or threads.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::int64_t> keys) {
  std::uint64_t h = splitmix64(seed ^ 0x5a179e3b0d1cULL);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(k)));
  return h;
}

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::int64_t> keys) {
  std::seed_seq seq{static_cast<std::uint32_t>(stream_key(seed, keys)),
                    static_cast<std::uint32_t>(stream_key(seed, keys) >> 32)};
  return Rng(seq);
}

// Stream tags, kept distinct so that different consumers never share a stream.
namespace stream_tag {
inline constexpr std::int64_t theta = 1;
inline constexpr std::int64_t common = 2;
inline constexpr std::int64_t fresh = 3;
inline constexpr std::int64_t block = 4;
inline constexpr std::int64_t test = 5;
}  // namespace stream_tag

}  // namespace sparse_nash
