#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedrec {

using Rng = std::mt19937_64;

// Independent streams: every random draw in a run is keyed by (seed, purpose, round, client)
// so serial and parallel execution consume identical streams.
enum class Stream : std::uint64_t {
  Init = 1,
  Sampling = 2,
  Negatives = 3,
  Noise = 4,
  Split = 5,
  Synthesize = 6,
  UserInit = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, Stream stream,
                                 std::initializer_list<std::uint64_t> parts = {}) noexcept {
  std::uint64_t h = splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(stream)));
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t base, Stream stream, std::initializer_list<std::uint64_t> parts = {}) {
  return Rng(derive_seed(base, stream, parts));
}

}  // namespace fedrec
