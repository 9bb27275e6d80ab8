#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace seqcl {

// splitmix64 finalizer, used for seed whitening and stream derivation.
std::uint64_t mix64(std::uint64_t x);

// Derives an independent child seed from a master seed, a purpose tag and up
// to two indices (step, pass, shard id, ...). Every consumer of randomness
// owns its own derived stream, so adding or removing draws in one place never
// shifts the sequence seen by another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; all sampling on top of it is hand-rolled
// here so no implementation-defined distribution code is involved and results
// are bit-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), unbiased via rejection sampling. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Index sampled proportionally to the given non-negative weights.
  std::size_t weighted_choice(std::span<const double> weights);

  // First k entries of a uniform random permutation of {0, ..., n-1}.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace seqcl
