#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqcl/rng.hpp"

namespace seqcl {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Reserved token ids. The grammar and the corruption operators only ever emit
// ids >= kFirstRealToken; the model owns the reserved ones.
inline constexpr TokenId kPadToken = 0;
inline constexpr TokenId kBosToken = 1;
inline constexpr TokenId kEosToken = 2;
inline constexpr TokenId kUnkToken = 3;
inline constexpr TokenId kFirstRealToken = 4;

// One training/eval example: an erroneous source sentence and its correction.
struct SentencePair {
  std::uint64_t id = 0;
  TokenSeq source;
  TokenSeq target;
  // Number of injected edits; generation metadata, absent for ingested data.
  std::optional<std::uint32_t> num_corruptions;

  bool operator==(const SentencePair&) const = default;
};

struct Corpus {
  std::uint32_t vocab_size = 0;
  std::vector<SentencePair> pairs;

  bool operator==(const Corpus&) const = default;
};

enum class CorruptOp : std::size_t {
  kSubstitute = 0,
  kDelete = 1,
  kInsert = 2,
  kSwapAdjacent = 3,
};

struct CorruptionConfig {
  std::uint32_t vocab_size = 50;
  // Inclusive clean-target length range.
  std::uint32_t min_len = 5;
  std::uint32_t max_len = 12;
  // Inclusive range of edits injected per sentence.
  std::uint32_t min_corruptions = 0;
  std::uint32_t max_corruptions = 4;
  // Relative weights for {substitute, delete, insert, swap-adjacent}.
  std::array<double, 4> op_weights{1.0, 1.0, 1.0, 1.0};
  // Order of the Markov chain that generates clean targets.
  std::uint32_t grammar_order = 2;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

// Seeded sparse Markov chain over the non-reserved vocabulary. Clean targets
// sampled from it are "grammatical": each context admits only a few weighted
// successors, so corruption produces genuinely correctable errors.
class MarkovGrammar {
 public:
  MarkovGrammar(std::uint32_t vocab_size, std::uint32_t order, std::uint64_t seed);

  TokenSeq sample_sentence(std::uint32_t length, Rng& rng) const;

  // Token from the chain's stationary marginal distribution.
  TokenId sample_marginal(Rng& rng) const;

  std::span<const double> marginal() const { return marginal_; }
  std::uint32_t order() const { return order_; }

 private:
  std::size_t context_index(std::span<const TokenId> ctx) const;

  std::uint32_t vocab_size_;
  std::uint32_t order_;
  std::uint32_t n_real_;
  std::size_t n_contexts_;
  std::uint32_t branch_;                 // successors per context
  std::vector<TokenId> succ_tokens_;     // n_contexts x branch
  std::vector<double> succ_weights_;     // n_contexts x branch
  std::vector<double> marginal_;         // stationary next-token marginal, size n_real
};

// Applies a sampled number of edits to the target. Operations that cannot
// apply (delete on a length-1 sentence, swap on length < 2) are resampled.
// Returns the corrupted source and the number of edits actually applied.
std::pair<TokenSeq, std::uint32_t> corrupt(const TokenSeq& target,
                                           const CorruptionConfig& config,
                                           const MarkovGrammar& grammar, Rng& rng);

// Pure function of (config, n, seed): clean targets from the seeded grammar,
// sources from corrupt(). Each pair draws from its own derived stream, so
// sharded generation concatenated in shard order matches the sequential run.
Corpus generate_corpus(const CorruptionConfig& config, std::size_t n, std::uint64_t seed);

// Line-delimited JSON, one record per pair, with a header record carrying
// {"vocab_size": V, "format_version": 1}.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

}  // namespace seqcl
