#pragma once

#include <cstdint>
#include <random>

namespace afn {

// splitmix64 finalizer; used to derive independent sub-stream seeds from
// (user seed, stream tag) pairs so that, e.g., the split permutation and the
// epoch-0 shuffle never share a stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Stream tags for mix_seed.
inline constexpr std::uint64_t kStreamSplit = 0x01;
inline constexpr std::uint64_t kStreamShuffle = 0x02;
inline constexpr std::uint64_t kStreamInit = 0x03;
inline constexpr std::uint64_t kStreamSynth = 0x04;
inline constexpr std::uint64_t kStreamFixture = 0x05;

// mt19937_64 with explicit value mapping. The standard library's
// distribution objects are implementation-defined, so frozen test vectors
// and cross-compiler determinism require rolling the mappings by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0, n); modulo bias is ~2^-64 and irrelevant at our ranges.
  std::uint64_t uniform_int(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 gen_;
};

// In-place Fisher-Yates permutation.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace afn
