#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqcl/rng.hpp"

namespace seqcl {

// Competence pacing: C(t) = min(1, (t * (1 - c0^k) / T + c0^k)^(1/k)).
struct CompetenceSchedule {
  double c0 = 0.01;     // initial competence in (0, 1]
  double k = 2.0;       // growth-shape exponent, >= 1
  std::uint64_t T = 1;  // curriculum length in steps, >= 1

  void validate() const;
};

double competence(const CompetenceSchedule& sched, std::uint64_t t);

struct Pool {
  std::vector<std::size_t> indices;  // ascending
  // True when fewer than `floor` scores qualified and the floor easiest
  // indices were returned instead.
  bool floor_engaged = false;
};

// All indices with normalized difficulty <= c. When fewer than `floor`
// qualify, the floor easiest indices (ties to the lower index) are returned.
Pool available_pool(std::span<const double> normalized, double c, std::size_t floor);

// Uniform sample without replacement; clamps to the pool size.
std::vector<std::size_t> next_batch(std::span<const std::size_t> pool, std::size_t batch_size,
                                    Rng& rng);

}  // namespace seqcl
