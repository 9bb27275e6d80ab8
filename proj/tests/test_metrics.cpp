#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <vector>

#include "fixtures.hpp"
#include "seqcl/errors.hpp"
#include "seqcl/metrics.hpp"

using namespace seqcl;
using seqcl::testing::random_real_tokens;

namespace {

// Independent Wagner-Fischer distance; deliberately a spare reimplementation
// so it shares nothing with the aligner's traceback.
std::size_t dp_distance(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t tokens_touched(const std::vector<Edit>& edits) {
  std::size_t total = 0;
  for (const Edit& e : edits) total += std::max(e.end - e.start, e.replacement.size());
  return total;
}

}  // namespace

TEST_CASE("identical sequences yield no edits") {
  TokenSeq s{4, 5, 6};
  CHECK(extract_edits(s, s).empty());
}

TEST_CASE("a single substitution is extracted as one span") {
  TokenSeq src{4, 5, 6}, dst{4, 5, 7};
  auto edits = extract_edits(src, dst);
  REQUIRE(edits.size() == 1);
  CHECK(edits[0] == Edit{2, 3, {7}});
}

TEST_CASE("a single insertion is extracted at its gap") {
  TokenSeq src{4, 6}, dst{4, 5, 6};
  auto edits = extract_edits(src, dst);
  REQUIRE(edits.size() == 1);
  CHECK(edits[0] == Edit{1, 1, {5}});
}

TEST_CASE("ambiguous insertions land leftmost") {
  TokenSeq src{4}, dst{4, 4};
  auto edits = extract_edits(src, dst);
  REQUIRE(edits.size() == 1);
  CHECK(edits[0] == Edit{0, 0, {4}});
}

TEST_CASE("adjacent operations merge into one span edit") {
  TokenSeq src{4, 5, 6, 7}, dst{4, 8, 7};
  auto edits = extract_edits(src, dst);
  REQUIRE(edits.size() == 1);
  CHECK(edits[0].start == 1);
  CHECK(edits[0].end == 3);
  CHECK(edits[0].replacement == TokenSeq{8});
}

TEST_CASE("apply_edits handles the empty set and total rewrites") {
  TokenSeq src{4, 5, 6};
  CHECK(apply_edits(src, {}) == src);
  std::vector<Edit> rewrite{Edit{0, 3, {9, 9}}};
  CHECK(apply_edits(src, rewrite) == TokenSeq{9, 9});
}

TEST_CASE("apply_edits rejects out-of-range and overlapping spans") {
  TokenSeq src{4, 5, 6};
  std::vector<Edit> bad_range{Edit{2, 5, {}}};
  CHECK_THROWS_AS(apply_edits(src, bad_range), ValidationError);
  std::vector<Edit> overlap{Edit{0, 2, {7}}, Edit{1, 3, {8}}};
  CHECK_THROWS_AS(apply_edits(src, overlap), ValidationError);
  std::vector<Edit> inverted{Edit{2, 1, {7}}};
  CHECK_THROWS_AS(apply_edits(src, inverted), ValidationError);
}

TEST_CASE("apply after extract reconstructs the hypothesis") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    TokenSeq src = random_real_tokens(10, 1 + rng.below(12), rng);
    TokenSeq dst = random_real_tokens(10, rng.below(13), rng);
    auto edits = extract_edits(src, dst);
    CHECK(apply_edits(src, edits) == dst);
    for (std::size_t e = 1; e < edits.size(); ++e) {
      CHECK(edits[e - 1].end <= edits[e].start);  // sorted, non-overlapping
    }
  }
}

TEST_CASE("extracted edits touch exactly the Levenshtein distance") {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    TokenSeq src = random_real_tokens(8, 1 + rng.below(12), rng);
    TokenSeq dst = random_real_tokens(8, 1 + rng.below(12), rng);
    auto edits = extract_edits(src, dst);
    CHECK(tokens_touched(edits) == dp_distance(src, dst));
  }
}

TEST_CASE("prf scores perfect agreement as ones") {
  std::vector<std::vector<Edit>> hyp{{Edit{0, 1, {5}}}, {}};
  EvalReport rep = prf(hyp, hyp);
  CHECK(rep.precision == 1.0);
  CHECK(rep.recall == 1.0);
  CHECK(rep.f_half == 1.0);
  CHECK(rep.tp == 1);
  CHECK(rep.fp == 0);
  CHECK(rep.fn == 0);
}

TEST_CASE("prf on an error-free corpus uses the 0/0 convention") {
  std::vector<std::vector<Edit>> none{{}, {}, {}};
  EvalReport rep = prf(none, none);
  CHECK(rep.precision == 1.0);
  CHECK(rep.recall == 1.0);
  CHECK(rep.f_half == 1.0);
}

TEST_CASE("prf matches the F-beta identities") {
  // tp=1, fp=1, fn=1: P = R = 0.5 so F0.5 = 0.5.
  std::vector<std::vector<Edit>> hyp{{Edit{0, 1, {5}}, Edit{2, 3, {6}}}};
  std::vector<std::vector<Edit>> gold{{Edit{0, 1, {5}}, Edit{4, 5, {7}}}};
  EvalReport rep = prf(hyp, gold);
  CHECK(rep.tp == 1);
  CHECK(rep.fp == 1);
  CHECK(rep.fn == 1);
  CHECK(rep.f_half == doctest::Approx(0.5).epsilon(1e-12));

  // tp=2, fp=1, fn=2: P = 2/3, R = 1/2, F0.5 = 0.625.
  std::vector<std::vector<Edit>> hyp2{
      {Edit{0, 1, {5}}, Edit{2, 3, {6}}, Edit{4, 4, {7}}}};
  std::vector<std::vector<Edit>> gold2{
      {Edit{0, 1, {5}}, Edit{2, 3, {6}}, Edit{5, 6, {8}}, Edit{7, 7, {9}}}};
  EvalReport rep2 = prf(hyp2, gold2);
  CHECK(rep2.tp == 2);
  CHECK(rep2.fp == 1);
  CHECK(rep2.fn == 2);
  CHECK(rep2.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(rep2.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep2.f_half == doctest::Approx(0.625).epsilon(1e-9));
}

TEST_CASE("prf rejects mismatched sentence counts") {
  std::vector<std::vector<Edit>> one(1), two(2);
  CHECK_THROWS_AS(prf(one, two), ValidationError);
}

TEST_CASE("swapping hypothesis and gold swaps fp and fn") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto random_edit_set = [&]() {
      std::vector<Edit> edits;
      std::size_t pos = 0;
      while (pos < 8 && rng.uniform01() < 0.6) {
        Edit e;
        e.start = pos + rng.below(3);
        e.end = e.start + rng.below(2);
        e.replacement = random_real_tokens(8, rng.below(3), rng);
        if (e.end == e.start && e.replacement.empty()) break;
        edits.push_back(e);
        pos = e.end + 1;
      }
      return edits;
    };
    std::vector<std::vector<Edit>> a{random_edit_set(), random_edit_set()};
    std::vector<std::vector<Edit>> b{random_edit_set(), random_edit_set()};
    EvalReport ab = prf(a, b);
    EvalReport ba = prf(b, a);
    CHECK(ab.tp == ba.tp);
    CHECK(ab.fp == ba.fn);
    CHECK(ab.fn == ba.fp);
  }
}

TEST_CASE("f_half lies between precision and recall") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const double p = 0.01 + 0.99 * rng.uniform01();
    const double r = 0.01 + 0.99 * rng.uniform01();
    const double f = f_beta(p, r, 0.5);
    CHECK(f >= std::min(p, r) - 1e-12);
    CHECK(f <= std::max(p, r) + 1e-12);
  }
}

namespace {

Corpus two_pair_corpus() {
  Corpus corpus;
  corpus.vocab_size = 10;
  corpus.pairs.push_back(SentencePair{0, {4, 5, 6}, {4, 5, 7}, std::nullopt});
  corpus.pairs.push_back(SentencePair{1, {5, 6, 7}, {5, 8, 7}, std::nullopt});
  return corpus;
}

}  // namespace

TEST_CASE("identical hypotheses give all-zero bin deltas") {
  Corpus corpus = two_pair_corpus();
  std::vector<double> scores{0.2, 0.9};
  std::vector<TokenSeq> hyps{{4, 5, 6}, {5, 6, 7}};  // both models fix nothing
  auto rows = difficulty_bin_report(scores, hyps, hyps, corpus, 4);
  REQUIRE(rows.size() == 4);
  for (const BinRow& row : rows) {
    if (!row.empty) CHECK(row.delta == 0.0);
  }
  CHECK(rows[0].count == 1);  // score 0.2 -> (0, 0.25]
  CHECK(rows[3].count == 1);  // score 0.9 -> (0.75, 1]
  CHECK(rows[1].empty);
  CHECK(rows[2].empty);
}

TEST_CASE("a treatment that fixes the hard pair moves only the hard bin") {
  Corpus corpus = two_pair_corpus();
  std::vector<double> scores{0.3, 0.8};
  // Baseline copies both sources; treatment also corrects the hard pair.
  std::vector<TokenSeq> baseline{{4, 5, 6}, {5, 6, 7}};
  std::vector<TokenSeq> treatment{{4, 5, 6}, {5, 8, 7}};
  auto rows = difficulty_bin_report(scores, baseline, treatment, corpus, 2);
  REQUIRE(rows.size() == 2);
  REQUIRE(!rows[0].empty);
  REQUIRE(!rows[1].empty);
  CHECK(rows[0].delta == 0.0);
  CHECK(rows[1].delta > 0.0);
  CHECK(rows[1].treatment_f == 1.0);
  CHECK(rows[1].baseline_f == 0.0);
}

TEST_CASE("one bin holding every pair reproduces the corpus-level delta") {
  Corpus corpus = two_pair_corpus();
  std::vector<double> scores{0.6, 0.8};  // both in the upper of 2 bins
  std::vector<TokenSeq> baseline{{4, 5, 6}, {5, 6, 7}};
  std::vector<TokenSeq> treatment{{4, 5, 7}, {5, 8, 7}};
  auto rows = difficulty_bin_report(scores, baseline, treatment, corpus, 2);
  REQUIRE(rows[0].empty);
  REQUIRE(!rows[1].empty);

  std::vector<std::vector<Edit>> base_edits, treat_edits, gold_edits;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    base_edits.push_back(extract_edits(corpus.pairs[i].source, baseline[i]));
    treat_edits.push_back(extract_edits(corpus.pairs[i].source, treatment[i]));
    gold_edits.push_back(extract_edits(corpus.pairs[i].source, corpus.pairs[i].target));
  }
  const double corpus_delta =
      prf(treat_edits, gold_edits).f_half - prf(base_edits, gold_edits).f_half;
  CHECK(rows[1].delta == doctest::Approx(corpus_delta).epsilon(1e-12));
}

TEST_CASE("difficulty_bin_report validates its inputs") {
  Corpus corpus = two_pair_corpus();
  std::vector<TokenSeq> hyps{{4}, {5}};
  CHECK_THROWS_AS(difficulty_bin_report(std::vector<double>{0.5}, hyps, hyps, corpus, 2),
                  ValidationError);
  CHECK_THROWS_AS(
      difficulty_bin_report(std::vector<double>{0.5, 0.5}, hyps, hyps, corpus, 1),
      ValidationError);
  CHECK_THROWS_AS(
      difficulty_bin_report(std::vector<double>{0.5, 1.5}, hyps, hyps, corpus, 2),
      ValidationError);
}

TEST_CASE("bin rows round-trip through JSON") {
  std::vector<BinRow> rows(3);
  rows[0] = BinRow{0.0, 0.5, 2, false, 0.5, 0.75, 0.25};
  rows[1] = BinRow{0.5, 1.0, 0, true, 0.0, 0.0, 0.0};
  rows[2] = BinRow{0.25, 0.75, 5, false, 0.1, 0.1, 0.0};
  const auto path = (std::filesystem::temp_directory_path() / "seqcl_bins.jsonl").string();
  save_bin_rows_json(rows, path);
  auto loaded = load_bin_rows_json(path);
  REQUIRE(loaded.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded[i].lo == rows[i].lo);
    CHECK(loaded[i].hi == rows[i].hi);
    CHECK(loaded[i].count == rows[i].count);
    CHECK(loaded[i].empty == rows[i].empty);
    if (!rows[i].empty) CHECK(loaded[i].delta == rows[i].delta);
  }
  std::filesystem::remove(path);
}
