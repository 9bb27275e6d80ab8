#include "seqcl/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqcl/errors.hpp"

namespace seqcl {

void CompetenceSchedule::validate() const {
  if (!(c0 > 0.0 && c0 <= 1.0)) {
    throw ValidationError("CompetenceSchedule.c0 must lie in (0, 1]");
  }
  if (!(k >= 1.0) || !std::isfinite(k)) {
    throw ValidationError("CompetenceSchedule.k must be >= 1");
  }
  if (T < 1) throw ValidationError("CompetenceSchedule.T must be >= 1");
}

double competence(const CompetenceSchedule& sched, std::uint64_t t) {
  sched.validate();
  // For t >= T the radicand is >= 1 and the min clamp applies.
  if (t >= sched.T) return 1.0;
  const double c0k = std::pow(sched.c0, sched.k);
  const double radicand =
      static_cast<double>(t) * (1.0 - c0k) / static_cast<double>(sched.T) + c0k;
  return std::min(1.0, std::pow(radicand, 1.0 / sched.k));
}

Pool available_pool(std::span<const double> normalized, double c, std::size_t floor) {
  if (floor < 1) throw ValidationError("available_pool: floor must be >= 1");
  if (floor > normalized.size()) {
    throw ValidationError("available_pool: floor " + std::to_string(floor) +
                          " exceeds corpus size " + std::to_string(normalized.size()));
  }
  for (double d : normalized) {
    if (!(d > 0.0 && d <= 1.0)) {
      throw ValidationError("available_pool: normalized difficulty outside (0, 1]");
    }
  }

  Pool pool;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if (normalized[i] <= c) pool.indices.push_back(i);
  }
  if (pool.indices.size() < floor) {
    pool.floor_engaged = true;
    std::vector<std::size_t> order(normalized.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return normalized[a] < normalized[b]; });
    order.resize(floor);
    std::sort(order.begin(), order.end());
    pool.indices = std::move(order);
  }
  return pool;
}

std::vector<std::size_t> next_batch(std::span<const std::size_t> pool, std::size_t batch_size,
                                    Rng& rng) {
  if (pool.empty()) throw ValidationError("next_batch: pool must be non-empty");
  if (batch_size < 1) throw ValidationError("next_batch: batch_size must be >= 1");
  auto picks = rng.sample_without_replacement(pool.size(), std::min(batch_size, pool.size()));
  std::vector<std::size_t> batch(picks.size());
  for (std::size_t i = 0; i < picks.size(); ++i) batch[i] = pool[picks[i]];
  return batch;
}

}  // namespace seqcl
