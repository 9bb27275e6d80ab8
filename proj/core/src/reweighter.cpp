#include "seqcl/reweighter.hpp"

#include <algorithm>
#include <cmath>

#include "seqcl/errors.hpp"

namespace seqcl {

UncertaintyStats stats_from_passes(std::uint64_t pair_id,
                                   const std::vector<std::vector<double>>& per_pass_gold_probs) {
  if (per_pass_gold_probs.empty()) {
    throw ValidationError("stats_from_passes: need at least one pass");
  }
  const std::size_t q = per_pass_gold_probs.size();
  const std::size_t len = per_pass_gold_probs[0].size();
  for (const auto& pass : per_pass_gold_probs) {
    if (pass.size() != len) throw ValidationError("stats_from_passes: ragged pass lengths");
  }

  UncertaintyStats stats;
  stats.pair_id = pair_id;
  stats.token_mean.assign(len, 0.0);
  stats.token_var.assign(len, 0.0);

  std::vector<double> pass_mean_logp(q, 0.0);
  for (std::size_t p = 0; p < q; ++p) {
    for (std::size_t t = 0; t < len; ++t) {
      const double prob = per_pass_gold_probs[p][t];
      if (!(prob > 0.0) || !std::isfinite(prob)) {
        throw NumericError("stats_from_passes: probability outside (0, 1] for pair " +
                           std::to_string(pair_id));
      }
      stats.token_mean[t] += prob;
      pass_mean_logp[p] += std::log(prob);
    }
    pass_mean_logp[p] /= static_cast<double>(len);
  }
  for (double& m : stats.token_mean) m /= static_cast<double>(q);

  if (q > 1) {
    for (std::size_t t = 0; t < len; ++t) {
      double acc = 0.0;
      for (std::size_t p = 0; p < q; ++p) {
        const double d = per_pass_gold_probs[p][t] - stats.token_mean[t];
        acc += d * d;
      }
      stats.token_var[t] = acc / static_cast<double>(q - 1);
    }
    double mean_logp = 0.0;
    for (double s : pass_mean_logp) mean_logp += s;
    mean_logp /= static_cast<double>(q);
    double acc = 0.0;
    for (double s : pass_mean_logp) acc += (s - mean_logp) * (s - mean_logp);
    stats.sent_var = acc / static_cast<double>(q - 1);
  }
  return stats;
}

UncertaintyStats mc_dropout_stats(const ModelParams& model, const SentencePair& pair,
                                  std::uint32_t q_passes, Rng& rng) {
  if (q_passes < 1) throw ValidationError("mc_dropout_stats: Q must be >= 1");
  std::vector<std::vector<double>> passes;
  passes.reserve(q_passes);
  for (std::uint32_t q = 0; q < q_passes; ++q) {
    passes.push_back(forward_teacher_forced(model, pair, true, &rng).gold);
  }
  return stats_from_passes(pair.id, passes);
}

std::vector<double> InstanceWeights::effective() const {
  std::vector<double> w(token_weights.size());
  for (std::size_t t = 0; t < w.size(); ++t) w[t] = sentence_weight * token_weights[t];
  return w;
}

std::vector<InstanceWeights> compute_weights(std::span<const UncertaintyStats> batch_stats,
                                             double alpha_token, double alpha_sentence) {
  if (batch_stats.empty()) throw ValidationError("compute_weights: batch must be non-empty");
  if (alpha_token < 0.0 || alpha_sentence < 0.0) {
    throw ValidationError("compute_weights: alpha scales must be >= 0");
  }

  double tok_min = 0.0, tok_max = 0.0;
  bool first = true;
  for (const UncertaintyStats& s : batch_stats) {
    for (double v : s.token_var) {
      if (first) { tok_min = tok_max = v; first = false; }
      tok_min = std::min(tok_min, v);
      tok_max = std::max(tok_max, v);
    }
  }
  double sent_min = batch_stats[0].sent_var, sent_max = batch_stats[0].sent_var;
  for (const UncertaintyStats& s : batch_stats) {
    sent_min = std::min(sent_min, s.sent_var);
    sent_max = std::max(sent_max, s.sent_var);
  }
  const double tok_span = tok_max - tok_min;
  const double sent_span = sent_max - sent_min;

  std::vector<InstanceWeights> out;
  out.reserve(batch_stats.size());
  for (const UncertaintyStats& s : batch_stats) {
    InstanceWeights w;
    w.pair_id = s.pair_id;
    w.token_weights.resize(s.token_var.size());
    for (std::size_t t = 0; t < s.token_var.size(); ++t) {
      const double vhat = tok_span > 0.0 ? (s.token_var[t] - tok_min) / tok_span : 0.0;
      w.token_weights[t] = 1.0 + alpha_token * vhat;
    }
    const double shat = sent_span > 0.0 ? (s.sent_var - sent_min) / sent_span : 0.0;
    w.sentence_weight = 1.0 + alpha_sentence * shat;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace seqcl
