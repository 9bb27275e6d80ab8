#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqcl/corpus.hpp"
#include "seqcl/rng.hpp"

namespace seqcl {

// Row-major matrix of doubles. Not a general tensor; just enough for the
// handful of fixed-shape weight matrices this model owns.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

struct ModelDims {
  std::uint32_t vocab_size = 50;
  std::uint32_t embed_dim = 32;
  std::uint32_t hidden_dim = 64;

  bool operator==(const ModelDims&) const = default;
};

// The parameter tensors, visited in a fixed order everywhere (Adam state,
// serialization, finite differences all index the same flattening). The
// recurrent cells are GRUs with gates packed row-wise: rows [0,H) reset,
// [H,2H) update, [2H,3H) candidate.
struct ParamBlock {
  Matrix embedding;              // V x E, shared by encoder and decoder inputs
  Matrix enc_in;                 // 3H x E
  Matrix enc_rec;                // 3H x H
  std::vector<double> enc_bias;  // 3H
  Matrix dec_in;                 // 3H x E
  Matrix dec_rec;                // 3H x H
  std::vector<double> dec_bias;  // 3H
  Matrix out_proj;               // V x H
  std::vector<double> out_bias;  // V

  template <typename F>
  void for_each(F&& f) {
    f(embedding.data); f(enc_in.data); f(enc_rec.data); f(enc_bias);
    f(dec_in.data); f(dec_rec.data); f(dec_bias); f(out_proj.data); f(out_bias);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(embedding.data); f(enc_in.data); f(enc_rec.data); f(enc_bias);
    f(dec_in.data); f(dec_rec.data); f(dec_bias); f(out_proj.data); f(out_bias);
  }

  std::size_t total_size() const;
  void set_zero();

  bool operator==(const ParamBlock&) const = default;
};

// Single-layer GRU encoder and decoder with a shared embedding table. The
// decoder starts from the encoder's final hidden state and projects each
// hidden state to vocab logits. Dropout applies to embedding outputs and to
// the decoder hidden state (inverted scaling at train time).
struct ModelParams {
  ModelDims dims;
  double dropout_rate = 0.0;
  ParamBlock w;

  std::size_t parameter_count() const { return w.total_size(); }

  bool operator==(const ModelParams&) const = default;
};

// Uniform init in [-0.08, 0.08] from a seeded stream.
ModelParams init_params(const ModelDims& dims, double dropout_rate, std::uint64_t seed);

// Teacher-forced probabilities of the gold sequence. The scored sequence is
// the pair's target followed by the end-of-sequence token, so its length is
// target length + 1; training therefore teaches the model when to stop.
struct TokenProbs {
  std::vector<double> gold;                // P(gold_t | gold_<t, source), in (0,1]
  std::vector<std::vector<double>> full;   // per-position distributions, if requested
};

// Pre-sampled inverted-dropout masks: one vector per embedded input position
// and per decoder hidden state. Entries are 0 or 1/keep_prob.
struct DropoutMasks {
  std::vector<std::vector<double>> enc_emb;     // n x E
  std::vector<std::vector<double>> dec_emb;     // (m+1) x E
  std::vector<std::vector<double>> dec_hidden;  // (m+1) x H
};

DropoutMasks sample_dropout_masks(const ModelParams& params, std::size_t source_len,
                                  std::size_t scored_len, Rng& rng);

// dropout_active = false: deterministic in (params, pair); rng may be null.
// dropout_active = true: masks are sampled from rng, which must be non-null.
TokenProbs forward_teacher_forced(const ModelParams& params, const SentencePair& pair,
                                  bool dropout_active, Rng* rng, bool want_full = false);

// Same forward with caller-supplied masks; used for gradient checking.
TokenProbs forward_teacher_forced_masked(const ModelParams& params, const SentencePair& pair,
                                         const DropoutMasks* masks, bool want_full = false);

// Mean negative log-likelihood of the gold tokens.
double nll_loss(const TokenProbs& probs);

// Weight-normalized mean: -sum(w_t log p_t) / sum(w_t). Equal weights reduce
// this to nll_loss bit for bit.
double weighted_nll_loss(const TokenProbs& probs, std::span<const double> weights);

using Gradients = ParamBlock;

struct WeightedPair {
  const SentencePair* pair = nullptr;
  // One weight per scored position (target length + 1); empty means all-ones.
  std::vector<double> token_weights;
};

struct BatchGrad {
  double loss = 0.0;  // mean weighted loss over the batch
  Gradients grads;
};

// Exact gradient of the mean weighted loss. With dropout_active the masks are
// sampled once per pair (from rng) and shared between forward and backward.
BatchGrad grad(const ModelParams& params, std::span<const WeightedPair> batch,
               bool dropout_active = false, Rng* rng = nullptr);

// Gradient with caller-supplied masks (one entry per pair; may hold nullptrs).
BatchGrad grad_masked(const ModelParams& params, std::span<const WeightedPair> batch,
                      std::span<const DropoutMasks* const> masks);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  bool operator==(const AdamState&) const = default;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Standard Adam with bias correction. state may be empty (zero-initialized
// to match the parameter count on first use).
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr);

// Deterministic argmax decoding (dropout inactive) until EOS or max_len
// emitted tokens; argmax ties break toward the lowest token id. The EOS
// itself is not part of the returned sequence.
TokenSeq greedy_decode(const ModelParams& params, const TokenSeq& source, std::size_t max_len);

// Versioned binary container; load(save(x)) is bitwise identity.
struct Checkpoint {
  ModelParams params;
  AdamState opt;
  std::uint64_t train_step = 0;

  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace seqcl
