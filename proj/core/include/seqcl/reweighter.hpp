#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqcl/corpus.hpp"
#include "seqcl/model.hpp"
#include "seqcl/rng.hpp"

namespace seqcl {

// Per-pair Monte-Carlo-dropout statistics over Q stochastic forward passes.
struct UncertaintyStats {
  std::uint64_t pair_id = 0;
  std::vector<double> token_mean;  // per-position mean gold-token probability
  std::vector<double> token_var;   // per-position sample variance (Q-1 denominator)
  double sent_var = 0.0;           // variance over passes of per-pass mean log-prob
};

// Aggregation core, separated so tests can feed hand-built pass outputs.
UncertaintyStats stats_from_passes(std::uint64_t pair_id,
                                   const std::vector<std::vector<double>>& per_pass_gold_probs);

// Q dropout-active teacher-forced passes, masks drawn from rng in pass order.
UncertaintyStats mc_dropout_stats(const ModelParams& model, const SentencePair& pair,
                                  std::uint32_t q_passes, Rng& rng);

struct InstanceWeights {
  std::uint64_t pair_id = 0;
  std::vector<double> token_weights;  // 1 + alpha_token * normalized token variance
  double sentence_weight = 1.0;       // 1 + alpha_sentence * normalized sentence variance

  // Per-token multiplier handed to the weighted loss: sentence * token.
  std::vector<double> effective() const;
};

// Min-max normalizes token variances over every token in the batch and
// sentence variances over the batch, then maps them affinely to weights.
// Degenerate spreads (all equal) normalize to zero, so weights reduce to 1
// exactly and the weighted loss equals the plain loss.
std::vector<InstanceWeights> compute_weights(std::span<const UncertaintyStats> batch_stats,
                                             double alpha_token, double alpha_sentence);

}  // namespace seqcl
