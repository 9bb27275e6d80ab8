#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "fixtures.hpp"
#include "seqcl/corpus.hpp"
#include "seqcl/difficulty.hpp"
#include "seqcl/errors.hpp"
#include "seqcl/trainer.hpp"

using namespace seqcl;
using seqcl::testing::make_copy_fixture;
using seqcl::testing::random_real_tokens;

namespace {

// Brute-force max-rank: |{j : raw_j <= raw_i}| / N.
std::vector<double> rank_oracle(const std::vector<double>& raw) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::size_t rank = 0;
    for (double r : raw) rank += (r <= raw[i]);
    out[i] = double(rank) / double(raw.size());
  }
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) { ma += ra[i]; mb += rb[i]; }
  ma /= n; mb /= n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("a perfect pilot scores every pair zero") {
  const std::uint32_t V = 12, L = 6, M = 8;
  ModelParams fixture = make_copy_fixture(V, L, M);
  Corpus corpus;
  corpus.vocab_size = V;
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    TokenSeq s = random_real_tokens(V, L, rng);
    corpus.pairs.push_back(SentencePair{std::uint64_t(i), s, s, 0});
  }
  for (double raw : score_corpus(fixture, corpus)) CHECK(raw == 0.0);
}

TEST_CASE("a uniform pilot scores every pair ln V") {
  const std::uint32_t V = 50;
  ModelParams p = init_params(ModelDims{V, 8, 10}, 0.0, 5);
  std::fill(p.w.out_proj.data.begin(), p.w.out_proj.data.end(), 0.0);
  std::fill(p.w.out_bias.begin(), p.w.out_bias.end(), 0.0);

  CorruptionConfig cc;
  cc.vocab_size = V;
  Corpus corpus = generate_corpus(cc, 50, 4);
  for (double raw : score_corpus(p, corpus)) {
    CHECK(raw == doctest::Approx(std::log(50.0)).epsilon(1e-12));
    CHECK(raw == doctest::Approx(3.912023).epsilon(1e-6));
  }
}

TEST_CASE("cdf_normalize matches the brute-force rank count") {
  std::vector<double> raw{3.0, 1.0, 2.0};
  std::vector<double> norm = cdf_normalize(raw);
  CHECK(norm == std::vector<double>{1.0, 1.0 / 3.0, 2.0 / 3.0});
  CHECK(norm == rank_oracle(raw));

  raw = {2.0, 2.0, 1.0};
  norm = cdf_normalize(raw);
  CHECK(norm == std::vector<double>{1.0, 1.0, 1.0 / 3.0});
  CHECK(norm == rank_oracle(raw));

  CHECK(cdf_normalize(std::vector<double>{42.0}) == std::vector<double>{1.0});

  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng.below(40));
    for (double& x : v) x = rng.uniform01() * 10.0 - 5.0;
    if (trial % 3 == 0 && v.size() > 2) v[0] = v[v.size() / 2];  // force ties
    CHECK(cdf_normalize(v) == rank_oracle(v));
  }
}

TEST_CASE("cdf_normalize range, order and distinct-multiset properties") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform01() * 20.0 - 10.0;
    std::vector<double> norm = cdf_normalize(v);

    double maxv = *std::max_element(v.begin(), v.end());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(norm[i] > 0.0);
      CHECK(norm[i] <= 1.0);
      if (v[i] == maxv) CHECK(norm[i] == 1.0);
      for (std::size_t j = 0; j < n; ++j) {
        if (v[i] < v[j]) CHECK(norm[i] <= norm[j]);
      }
    }

    std::vector<double> sorted_v = v;
    std::sort(sorted_v.begin(), sorted_v.end());
    const bool distinct = std::adjacent_find(sorted_v.begin(), sorted_v.end()) == sorted_v.end();
    if (distinct) {
      std::vector<double> sorted_norm = norm;
      std::sort(sorted_norm.begin(), sorted_norm.end());
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(sorted_norm[i] == double(i + 1) / double(n));
      }
      // Idempotence: ranking the ranks changes nothing.
      CHECK(cdf_normalize(norm) == norm);
    }
  }
}

TEST_CASE("cdf_normalize rejects empty and non-finite input") {
  CHECK_THROWS_AS(cdf_normalize(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(cdf_normalize(std::vector<double>{1.0, std::nan("")}), ValidationError);
}

TEST_CASE("difficulty files round-trip") {
  std::vector<DifficultyScore> scores{{0, 1.5, 0.5}, {1, 2.5, 1.0}};
  const auto path = (std::filesystem::temp_directory_path() / "seqcl_difficulty.jsonl").string();
  save_difficulty(scores, path);
  auto loaded = load_difficulty(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].pair_id == 0);
  CHECK(loaded[0].raw == 1.5);
  CHECK(loaded[0].normalized == 0.5);
  CHECK(loaded[1].normalized == 1.0);
  std::filesystem::remove(path);
}

TEST_CASE("trained pilot loss tracks the corruption count") {
  TrainConfig cfg;
  cfg.vocab_size = 30;
  cfg.n_train = 2400;
  cfg.n_test = 10;
  cfg.min_len = 5;
  cfg.max_len = 10;
  cfg.min_corruptions = 0;
  cfg.max_corruptions = 3;
  cfg.embed_dim = 16;
  cfg.hidden_dim = 32;
  cfg.dropout = 0.1;
  cfg.batch_tokens = 256;
  cfg.pilot_epochs = 2;
  cfg.corpus_seed = 21;

  ModelParams pilot = train_pilot(cfg, 1);
  Corpus corpus = generate_corpus(cfg.corruption_config(), cfg.n_train, cfg.corpus_seed);
  std::vector<double> raw = score_corpus(pilot, corpus);

  double mean0 = 0.0, mean3 = 0.0;
  std::size_t n0 = 0, n3 = 0;
  std::vector<double> corruption_counts(corpus.pairs.size());
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const auto k = corpus.pairs[i].num_corruptions.value();
    corruption_counts[i] = double(k);
    if (k == 0) { mean0 += raw[i]; ++n0; }
    if (k == 3) { mean3 += raw[i]; ++n3; }
  }
  REQUIRE(n0 >= 500);
  REQUIRE(n3 >= 500);
  mean0 /= double(n0);
  mean3 /= double(n3);
  CHECK(mean3 > mean0);

  // The synthetic difficulty gradient is real: corruption count and pilot
  // loss correlate positively in rank.
  CHECK(spearman(corruption_counts, raw) > 0.0);
}
