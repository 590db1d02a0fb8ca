#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fragchoice {

// SplitMix64 finalizer. Used both for deriving substream seeds and for
// deterministic treap priorities.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Substream seed for replica `index` of a master seed. Replica streams are
// statistically independent and stable across thread counts, so ensemble
// results depend only on (master_seed, index).
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

// Seedable generator with explicit uint64 -> double conversion so that
// streams are reproducible bit-for-bit across platforms (the standard
// distributions are not pinned by the C++ standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static Rng substream(std::uint64_t master, std::uint64_t index) {
    return Rng(substream_seed(master, index));
  }

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1].
  double uniform_oc() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform on (0,1).
  double uniform_open() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exp(1) by inverse transform.
  double exponential() { return -std::log(uniform_oc()); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace fragchoice
