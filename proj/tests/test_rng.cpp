#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "seqcl/errors.hpp"
#include "seqcl/rng.hpp"

using namespace seqcl;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived seeds separate by tag and index") {
  const std::uint64_t master = 7;
  CHECK(derive_seed(master, "batch", 0) != derive_seed(master, "batch", 1));
  CHECK(derive_seed(master, "batch", 0) != derive_seed(master, "mc", 0));
  CHECK(derive_seed(master, "batch", 3, 1) != derive_seed(master, "batch", 3, 2));
  CHECK(derive_seed(master, "batch", 5) == derive_seed(master, "batch", 5));
}

TEST_CASE("below stays in range and covers it") {
  Rng rng(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK_THROWS_AS(rng.below(0), ValidationError);
}

TEST_CASE("uniform_int is inclusive on both ends") {
  Rng rng(2);
  bool lo = false, hi = false;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.uniform_int(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    lo |= (v == -3);
    hi |= (v == 3);
  }
  CHECK(lo);
  CHECK(hi);
}

TEST_CASE("uniform01 lies in [0,1)") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("weighted_choice respects zero weights") {
  Rng rng(4);
  const double weights[] = {0.0, 1.0, 0.0, 2.0};
  for (int i = 0; i < 500; ++i) {
    const std::size_t c = rng.weighted_choice(weights);
    CHECK((c == 1 || c == 3));
  }
  const double bad[] = {0.0, 0.0};
  CHECK_THROWS_AS(rng.weighted_choice(bad), ValidationError);
}

TEST_CASE("sample_without_replacement yields distinct indices") {
  Rng rng(5);
  auto picks = rng.sample_without_replacement(10, 6);
  CHECK(picks.size() == 6);
  std::set<std::size_t> uniq(picks.begin(), picks.end());
  CHECK(uniq.size() == 6);
  for (std::size_t p : picks) CHECK(p < 10);

  auto all = rng.sample_without_replacement(4, 99);
  CHECK(all.size() == 4);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3});
}
