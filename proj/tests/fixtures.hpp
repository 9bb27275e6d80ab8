#pragma once

// Shared test fixtures: a hand-built copy transducer and small random models.

#include <cstdint>

#include "seqcl/corpus.hpp"
#include "seqcl/model.hpp"
#include "seqcl/rng.hpp"

namespace seqcl::testing {

// A tape transducer that copies sources of one fixed length and then emits
// EOS. The hidden state is organized as `blocks` blocks of V slots. Gate
// biases pin the GRU's reset gate to ~1 and update gate to ~0, so the
// candidate path acts alone: the encoder pushes each token into block 0
// while rotating the tape one block per step, the decoder keeps rotating,
// and the output projection reads the block where token t surfaces at decode
// step t. The rotation gain of 2 has a stable tanh fixpoint near 0.96, and
// the logit gain makes softmax tails underflow, so gold-token probabilities
// are exactly 1.0 in double precision.
inline ModelParams make_copy_fixture(std::uint32_t vocab, std::uint32_t source_len,
                                     std::uint32_t blocks) {
  const double kGate = 30.0;    // sigmoid(+-30) is 1 or 0 up to ~1e-13
  const double kGain = 2.0;     // tape value fixpoint tanh(2x) = x at ~0.9575
  const double kLogit = 1700.0; // logit gaps big enough to underflow softmax tails

  const std::uint32_t V = vocab;
  const std::uint32_t L = source_len;
  const std::uint32_t M = blocks;  // must be >= L + 2
  const std::uint32_t H = M * V;

  ModelParams p;
  p.dims = ModelDims{V, V, H};
  p.dropout_rate = 0.0;
  p.w.embedding = Matrix(V, V);
  p.w.enc_in = Matrix(3 * H, V);
  p.w.enc_rec = Matrix(3 * H, H);
  p.w.enc_bias.assign(3 * H, 0.0);
  p.w.dec_in = Matrix(3 * H, V);
  p.w.dec_rec = Matrix(3 * H, H);
  p.w.dec_bias.assign(3 * H, 0.0);
  p.w.out_proj = Matrix(V, H);
  p.w.out_bias.assign(V, 0.0);

  for (std::uint32_t i = 0; i < H; ++i) {
    p.w.enc_bias[i] = kGate;           // reset gate open
    p.w.enc_bias[H + i] = -kGate;      // update gate closed
    p.w.dec_bias[i] = kGate;
    p.w.dec_bias[H + i] = -kGate;
  }

  for (std::uint32_t v = 0; v < V; ++v) p.w.embedding.at(v, v) = 1.0;
  // Candidate rows live at offset 2H: token injection into block 0.
  for (std::uint32_t v = 0; v < V; ++v) p.w.enc_in.at(2 * H + v, v) = kGain;
  for (std::uint32_t b = 0; b < M; ++b) {
    for (std::uint32_t v = 0; v < V; ++v) {
      const std::uint32_t from = b * V + v;
      const std::uint32_t to = ((b + 1) % M) * V + v;
      p.w.enc_rec.at(2 * H + to, from) = kGain;
      p.w.dec_rec.at(2 * H + to, from) = kGain;
    }
  }
  for (std::uint32_t v = 0; v < V; ++v) p.w.out_proj.at(v, L * V + v) = kLogit;
  p.w.out_bias[kEosToken] = kLogit / 2.0;
  p.w.out_bias[kPadToken] = -kLogit;
  p.w.out_bias[kBosToken] = -kLogit;
  p.w.out_bias[kUnkToken] = -kLogit;
  return p;
}

inline TokenSeq random_real_tokens(std::uint32_t vocab, std::size_t len, Rng& rng) {
  TokenSeq seq(len);
  for (std::size_t i = 0; i < len; ++i) {
    seq[i] = kFirstRealToken +
             static_cast<TokenId>(rng.below(vocab - kFirstRealToken));
  }
  return seq;
}

inline SentencePair random_pair(std::uint32_t vocab, std::size_t src_len, std::size_t tgt_len,
                                std::uint64_t id, Rng& rng) {
  SentencePair pair;
  pair.id = id;
  pair.source = random_real_tokens(vocab, src_len, rng);
  pair.target = random_real_tokens(vocab, tgt_len, rng);
  return pair;
}

}  // namespace seqcl::testing
