#pragma once

#include <cstdint>
#include <string_view>

namespace survpc {

inline constexpr std::uint64_t kDefaultSeed = 12345;

// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Map 64 random bits to the open interval (0,1); neither endpoint is produced.
inline double uniform_from_bits(std::uint64_t bits) {
  return (double(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Draw streams for the distinct phases of a run.  Separate tags guarantee
// that e.g. marginal-model construction never reuses the uniforms consumed by
// the band replicates under the same master seed.
enum class RngStream : std::uint64_t {
  study_gen = 1,
  replicate = 2,
  marginal_build = 3,
};

// Counter-based uniform source.  Every draw is a pure function of
// (master seed, stream, replicate index, subject key, draw index), so results
// are reproducible and independent of evaluation order and thread count.
class CounterRng {
public:
  CounterRng(std::uint64_t master_seed, RngStream stream, std::uint64_t replicate_index)
      : key_(mix64(mix64(mix64(master_seed) ^ static_cast<std::uint64_t>(stream)) ^
                   replicate_index)) {}

  double uniform(std::uint64_t subject_key, std::uint64_t draw_index) const {
    return uniform_from_bits(mix64(mix64(key_ ^ subject_key) ^ draw_index));
  }

private:
  std::uint64_t key_;
};

}  // namespace survpc
