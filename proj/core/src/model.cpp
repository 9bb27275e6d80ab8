#include "seqcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "seqcl/errors.hpp"

namespace seqcl {

namespace {

void check_sequence(const TokenSeq& seq, std::uint32_t vocab, const char* what) {
  if (seq.empty()) {
    throw ValidationError(std::string(what) + ": sequence must be non-empty");
  }
  for (TokenId t : seq) {
    if (t >= vocab) {
      throw ValidationError(std::string(what) + ": token id " + std::to_string(t) +
                            " out of range for vocab size " + std::to_string(vocab));
    }
  }
}

// y += W x
inline void matvec_acc(const Matrix& W, const double* x, double* y) {
  for (std::size_t r = 0; r < W.rows; ++r) {
    const double* row = W.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < W.cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// x_grad += W^T y, row-wise so accesses stay contiguous
inline void matvec_t_acc(const Matrix& W, const double* y, double* x_grad) {
  for (std::size_t r = 0; r < W.rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    const double* row = W.row(r);
    for (std::size_t c = 0; c < W.cols; ++c) x_grad[c] += row[c] * yr;
  }
}

// dW += y (outer) x
inline void outer_acc(Matrix& dW, const double* y, const double* x) {
  for (std::size_t r = 0; r < dW.rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    double* row = dW.row(r);
    for (std::size_t c = 0; c < dW.cols; ++c) row[c] += yr * x[c];
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-step GRU activations kept for the backward pass.
struct GruCache {
  std::vector<double> r, z, n, un;  // un = candidate rows of Wh * h_prev
};

struct Trace {
  std::size_t n = 0;     // source length
  std::size_t mhat = 0;  // scored length = target length + 1 (EOS step)
  TokenSeq source;
  TokenSeq dec_inputs;   // [bos, y_1 .. y_m]
  TokenSeq dec_gold;     // [y_1 .. y_m, eos]
  std::vector<std::vector<double>> enc_x;  // dropped embeddings, n x E
  std::vector<std::vector<double>> enc_h;  // n x H
  std::vector<GruCache> enc_g;
  std::vector<std::vector<double>> dec_x;  // mhat x E
  std::vector<std::vector<double>> dec_h;  // mhat x H, pre-dropout
  std::vector<GruCache> dec_g;
  std::vector<std::vector<double>> dec_u;  // mhat x H, post-dropout
  std::vector<std::vector<double>> probs;  // mhat x V
  std::vector<double> gold_logp;           // mhat
};

// One GRU step. h_prev may be null (all-zero initial state). Gates are packed
// row-wise in Wx/Wh/b: reset, update, candidate.
void gru_step(const Matrix& Wx, const Matrix& Wh, const std::vector<double>& b, const double* x,
              const double* h_prev, GruCache& cache, double* h_out) {
  const std::size_t H = Wh.cols;
  std::vector<double> wx = b;
  matvec_acc(Wx, x, wx.data());
  std::vector<double> uh(3 * H, 0.0);
  if (h_prev != nullptr) matvec_acc(Wh, h_prev, uh.data());

  cache.r.resize(H);
  cache.z.resize(H);
  cache.n.resize(H);
  cache.un.resize(H);
  for (std::size_t i = 0; i < H; ++i) {
    cache.r[i] = sigmoid(wx[i] + uh[i]);
    cache.z[i] = sigmoid(wx[H + i] + uh[H + i]);
    cache.un[i] = uh[2 * H + i];
    cache.n[i] = std::tanh(wx[2 * H + i] + cache.r[i] * cache.un[i]);
    h_out[i] = (1.0 - cache.z[i]) * cache.n[i] +
               cache.z[i] * (h_prev != nullptr ? h_prev[i] : 0.0);
  }
}

// Backward through one GRU step. dh is the gradient w.r.t. h_out; on return
// dh_prev holds the gradient w.r.t. h_prev. dx_out accumulates Wx^T deltas.
void gru_backward(const Matrix& Wx, const Matrix& Wh, const GruCache& cache, const double* x,
                  const double* h_prev, const double* dh, Matrix& dWx, Matrix& dWh,
                  std::vector<double>& db, double* dx_out, double* dh_prev) {
  const std::size_t H = Wh.cols;
  std::vector<double> delta_x(3 * H), delta_h(3 * H);
  for (std::size_t i = 0; i < H; ++i) {
    const double r = cache.r[i], z = cache.z[i], n = cache.n[i];
    const double hp = h_prev != nullptr ? h_prev[i] : 0.0;
    const double dn = dh[i] * (1.0 - z);
    const double dz = dh[i] * (hp - n);
    const double dan = dn * (1.0 - n * n);
    const double dr = dan * cache.un[i];
    const double dar = dr * r * (1.0 - r);
    const double daz = dz * z * (1.0 - z);
    delta_x[i] = dar;
    delta_x[H + i] = daz;
    delta_x[2 * H + i] = dan;
    delta_h[i] = dar;
    delta_h[H + i] = daz;
    delta_h[2 * H + i] = dan * r;
    dh_prev[i] = dh[i] * z;
  }
  for (std::size_t i = 0; i < 3 * H; ++i) db[i] += delta_x[i];
  outer_acc(dWx, delta_x.data(), x);
  matvec_t_acc(Wx, delta_x.data(), dx_out);
  if (h_prev != nullptr) {
    outer_acc(dWh, delta_h.data(), h_prev);
    matvec_t_acc(Wh, delta_h.data(), dh_prev);
  }
}

void run_forward(const ModelParams& p, const SentencePair& pair, const DropoutMasks* masks,
                 Trace& tr) {
  const std::size_t E = p.dims.embed_dim;
  const std::size_t H = p.dims.hidden_dim;
  const std::size_t V = p.dims.vocab_size;
  check_sequence(pair.source, p.dims.vocab_size, "source");
  check_sequence(pair.target, p.dims.vocab_size, "target");

  tr.n = pair.source.size();
  tr.mhat = pair.target.size() + 1;
  tr.source = pair.source;
  tr.dec_inputs.clear();
  tr.dec_inputs.reserve(tr.mhat);
  tr.dec_inputs.push_back(kBosToken);
  tr.dec_inputs.insert(tr.dec_inputs.end(), pair.target.begin(), pair.target.end());
  tr.dec_gold = pair.target;
  tr.dec_gold.push_back(kEosToken);

  tr.enc_x.assign(tr.n, std::vector<double>(E));
  tr.enc_h.assign(tr.n, std::vector<double>(H));
  tr.enc_g.assign(tr.n, GruCache{});
  tr.dec_x.assign(tr.mhat, std::vector<double>(E));
  tr.dec_h.assign(tr.mhat, std::vector<double>(H));
  tr.dec_g.assign(tr.mhat, GruCache{});
  tr.dec_u.assign(tr.mhat, std::vector<double>(H));
  tr.probs.assign(tr.mhat, std::vector<double>(V));
  tr.gold_logp.assign(tr.mhat, 0.0);

  const double* h_prev = nullptr;
  for (std::size_t t = 0; t < tr.n; ++t) {
    const double* emb = p.w.embedding.row(pair.source[t]);
    double* x = tr.enc_x[t].data();
    if (masks) {
      const double* m = masks->enc_emb[t].data();
      for (std::size_t i = 0; i < E; ++i) x[i] = emb[i] * m[i];
    } else {
      std::copy(emb, emb + E, x);
    }
    gru_step(p.w.enc_in, p.w.enc_rec, p.w.enc_bias, x, h_prev, tr.enc_g[t],
             tr.enc_h[t].data());
    h_prev = tr.enc_h[t].data();
  }

  std::vector<double> logits(V);
  const double* g_prev = h_prev;  // decoder starts from the encoder final state
  for (std::size_t t = 0; t < tr.mhat; ++t) {
    const double* emb = p.w.embedding.row(tr.dec_inputs[t]);
    double* x = tr.dec_x[t].data();
    if (masks) {
      const double* m = masks->dec_emb[t].data();
      for (std::size_t i = 0; i < E; ++i) x[i] = emb[i] * m[i];
    } else {
      std::copy(emb, emb + E, x);
    }
    gru_step(p.w.dec_in, p.w.dec_rec, p.w.dec_bias, x, g_prev, tr.dec_g[t],
             tr.dec_h[t].data());
    g_prev = tr.dec_h[t].data();

    if (masks) {
      const double* m = masks->dec_hidden[t].data();
      for (std::size_t i = 0; i < H; ++i) tr.dec_u[t][i] = tr.dec_h[t][i] * m[i];
    } else {
      tr.dec_u[t] = tr.dec_h[t];
    }

    logits = p.w.out_bias;
    matvec_acc(p.w.out_proj, tr.dec_u[t].data(), logits.data());
    double maxv = logits[0];
    for (std::size_t v = 1; v < V; ++v) maxv = std::max(maxv, logits[v]);
    double sum = 0.0;
    for (std::size_t v = 0; v < V; ++v) sum += std::exp(logits[v] - maxv);
    const double lse = maxv + std::log(sum);
    for (std::size_t v = 0; v < V; ++v) tr.probs[t][v] = std::exp(logits[v] - lse);
    tr.gold_logp[t] = logits[tr.dec_gold[t]] - lse;
  }
}

// Accumulates the gradient of scale * (-sum_t w_t log p_t / sum_t w_t) for one
// traced pair. weights may be empty (all ones).
void backward(const ModelParams& p, const Trace& tr, std::span<const double> weights,
              const DropoutMasks* masks, double scale, Gradients& g) {
  const std::size_t E = p.dims.embed_dim;
  const std::size_t H = p.dims.hidden_dim;
  const std::size_t V = p.dims.vocab_size;

  double wsum = 0.0;
  for (std::size_t t = 0; t < tr.mhat; ++t) wsum += weights.empty() ? 1.0 : weights[t];

  std::vector<double> dlogit(V), du(H), dcur(H, 0.0), dnext(H), dx(E);
  // Decoder BPTT.
  for (std::size_t t = tr.mhat; t-- > 0;) {
    const double wt = weights.empty() ? 1.0 : weights[t];
    const double coef = scale * wt / wsum;
    const double* probs = tr.probs[t].data();
    for (std::size_t v = 0; v < V; ++v) dlogit[v] = coef * probs[v];
    dlogit[tr.dec_gold[t]] -= coef;

    for (std::size_t v = 0; v < V; ++v) g.out_bias[v] += dlogit[v];
    outer_acc(g.out_proj, dlogit.data(), tr.dec_u[t].data());
    std::fill(du.begin(), du.end(), 0.0);
    matvec_t_acc(p.w.out_proj, dlogit.data(), du.data());
    if (masks) {
      const double* m = masks->dec_hidden[t].data();
      for (std::size_t i = 0; i < H; ++i) dcur[i] += du[i] * m[i];
    } else {
      for (std::size_t i = 0; i < H; ++i) dcur[i] += du[i];
    }

    const double* g_prev = (t == 0) ? tr.enc_h[tr.n - 1].data() : tr.dec_h[t - 1].data();
    std::fill(dx.begin(), dx.end(), 0.0);
    gru_backward(p.w.dec_in, p.w.dec_rec, tr.dec_g[t], tr.dec_x[t].data(), g_prev, dcur.data(),
                 g.dec_in, g.dec_rec, g.dec_bias, dx.data(), dnext.data());

    double* emb_row = g.embedding.row(tr.dec_inputs[t]);
    if (masks) {
      const double* m = masks->dec_emb[t].data();
      for (std::size_t i = 0; i < E; ++i) emb_row[i] += dx[i] * m[i];
    } else {
      for (std::size_t i = 0; i < E; ++i) emb_row[i] += dx[i];
    }
    dcur = dnext;
  }

  // dcur now carries the gradient w.r.t. the encoder final state.
  for (std::size_t t = tr.n; t-- > 0;) {
    const double* h_prev = (t == 0) ? nullptr : tr.enc_h[t - 1].data();
    std::fill(dnext.begin(), dnext.end(), 0.0);
    std::fill(dx.begin(), dx.end(), 0.0);
    gru_backward(p.w.enc_in, p.w.enc_rec, tr.enc_g[t], tr.enc_x[t].data(), h_prev, dcur.data(),
                 g.enc_in, g.enc_rec, g.enc_bias, dx.data(), dnext.data());

    double* emb_row = g.embedding.row(tr.source[t]);
    if (masks) {
      const double* m = masks->enc_emb[t].data();
      for (std::size_t i = 0; i < E; ++i) emb_row[i] += dx[i] * m[i];
    } else {
      for (std::size_t i = 0; i < E; ++i) emb_row[i] += dx[i];
    }
    dcur = dnext;
  }
}

}  // namespace

std::size_t ParamBlock::total_size() const {
  std::size_t n = 0;
  for_each([&](const std::vector<double>& t) { n += t.size(); });
  return n;
}

void ParamBlock::set_zero() {
  for_each([](std::vector<double>& t) { std::fill(t.begin(), t.end(), 0.0); });
}

ModelParams init_params(const ModelDims& dims, double dropout_rate, std::uint64_t seed) {
  if (dims.vocab_size < kFirstRealToken + 1) {
    throw ValidationError("ModelDims.vocab_size: must cover the 4 reserved ids plus data");
  }
  if (dims.embed_dim == 0 || dims.hidden_dim == 0) {
    throw ValidationError("ModelDims: embed_dim and hidden_dim must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError("dropout_rate must lie in [0, 1)");
  }
  ModelParams p;
  p.dims = dims;
  p.dropout_rate = dropout_rate;
  const std::size_t V = dims.vocab_size, E = dims.embed_dim, H = dims.hidden_dim;
  p.w.embedding = Matrix(V, E);
  p.w.enc_in = Matrix(3 * H, E);
  p.w.enc_rec = Matrix(3 * H, H);
  p.w.enc_bias.assign(3 * H, 0.0);
  p.w.dec_in = Matrix(3 * H, E);
  p.w.dec_rec = Matrix(3 * H, H);
  p.w.dec_bias.assign(3 * H, 0.0);
  p.w.out_proj = Matrix(V, H);
  p.w.out_bias.assign(V, 0.0);

  Rng rng(derive_seed(seed, "param-init"));
  p.w.for_each([&](std::vector<double>& t) {
    for (double& x : t) x = (rng.uniform01() * 2.0 - 1.0) * 0.08;
  });
  return p;
}

DropoutMasks sample_dropout_masks(const ModelParams& params, std::size_t source_len,
                                  std::size_t scored_len, Rng& rng) {
  const double keep = 1.0 - params.dropout_rate;
  const double inv = 1.0 / keep;
  auto sample_block = [&](std::size_t rows, std::size_t cols) {
    std::vector<std::vector<double>> block(rows, std::vector<double>(cols));
    for (auto& row : block) {
      for (double& v : row) v = (rng.uniform01() < keep) ? inv : 0.0;
    }
    return block;
  };
  DropoutMasks m;
  m.enc_emb = sample_block(source_len, params.dims.embed_dim);
  m.dec_emb = sample_block(scored_len, params.dims.embed_dim);
  m.dec_hidden = sample_block(scored_len, params.dims.hidden_dim);
  return m;
}

TokenProbs forward_teacher_forced_masked(const ModelParams& params, const SentencePair& pair,
                                         const DropoutMasks* masks, bool want_full) {
  Trace tr;
  run_forward(params, pair, masks, tr);
  TokenProbs out;
  out.gold.resize(tr.mhat);
  for (std::size_t t = 0; t < tr.mhat; ++t) out.gold[t] = std::exp(tr.gold_logp[t]);
  if (want_full) out.full = tr.probs;
  return out;
}

TokenProbs forward_teacher_forced(const ModelParams& params, const SentencePair& pair,
                                  bool dropout_active, Rng* rng, bool want_full) {
  if (!dropout_active) {
    return forward_teacher_forced_masked(params, pair, nullptr, want_full);
  }
  if (rng == nullptr) {
    throw ValidationError("forward_teacher_forced: dropout_active requires an rng");
  }
  DropoutMasks masks =
      sample_dropout_masks(params, pair.source.size(), pair.target.size() + 1, *rng);
  return forward_teacher_forced_masked(params, pair, &masks, want_full);
}

double nll_loss(const TokenProbs& probs) {
  if (probs.gold.empty()) throw ValidationError("nll_loss: probs must be non-empty");
  double sum = 0.0;
  for (double p : probs.gold) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw NumericError("nll_loss: probability outside (0, 1]");
    }
    sum += std::log(p);
  }
  return -sum / static_cast<double>(probs.gold.size());
}

double weighted_nll_loss(const TokenProbs& probs, std::span<const double> weights) {
  if (probs.gold.empty()) throw ValidationError("weighted_nll_loss: probs must be non-empty");
  if (weights.size() != probs.gold.size()) {
    throw ValidationError("weighted_nll_loss: weights length " + std::to_string(weights.size()) +
                          " != probs length " + std::to_string(probs.gold.size()));
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    if (!(weights[t] > 0.0) || !std::isfinite(weights[t])) {
      throw ValidationError("weighted_nll_loss: weights must be positive and finite");
    }
    const double p = probs.gold[t];
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw NumericError("weighted_nll_loss: probability outside (0, 1]");
    }
    num += weights[t] * std::log(p);
    den += weights[t];
  }
  return -num / den;
}

namespace {

Gradients make_zero_grads(const ModelParams& p) {
  Gradients g;
  g.embedding = Matrix(p.w.embedding.rows, p.w.embedding.cols);
  g.enc_in = Matrix(p.w.enc_in.rows, p.w.enc_in.cols);
  g.enc_rec = Matrix(p.w.enc_rec.rows, p.w.enc_rec.cols);
  g.enc_bias.assign(p.w.enc_bias.size(), 0.0);
  g.dec_in = Matrix(p.w.dec_in.rows, p.w.dec_in.cols);
  g.dec_rec = Matrix(p.w.dec_rec.rows, p.w.dec_rec.cols);
  g.dec_bias.assign(p.w.dec_bias.size(), 0.0);
  g.out_proj = Matrix(p.w.out_proj.rows, p.w.out_proj.cols);
  g.out_bias.assign(p.w.out_bias.size(), 0.0);
  return g;
}

double pair_weighted_loss(const Trace& tr, std::span<const double> weights,
                          std::uint64_t pair_id) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < tr.mhat; ++t) {
    const double wt = weights.empty() ? 1.0 : weights[t];
    num += wt * tr.gold_logp[t];
    den += wt;
  }
  const double loss = -num / den;
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss for pair " + std::to_string(pair_id));
  }
  return loss;
}

void check_weights(const WeightedPair& wp) {
  if (wp.pair == nullptr) throw ValidationError("grad: null pair in batch");
  if (wp.token_weights.empty()) return;
  const std::size_t expect = wp.pair->target.size() + 1;
  if (wp.token_weights.size() != expect) {
    throw ValidationError("grad: pair " + std::to_string(wp.pair->id) + " has " +
                          std::to_string(wp.token_weights.size()) + " weights, expected " +
                          std::to_string(expect));
  }
  for (double w : wp.token_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ValidationError("grad: token weights must be positive and finite");
    }
  }
}

}  // namespace

BatchGrad grad_masked(const ModelParams& params, std::span<const WeightedPair> batch,
                      std::span<const DropoutMasks* const> masks) {
  if (batch.empty()) throw ValidationError("grad: batch must be non-empty");
  if (!masks.empty() && masks.size() != batch.size()) {
    throw ValidationError("grad: masks count must match batch size");
  }
  BatchGrad out;
  out.grads = make_zero_grads(params);
  const double scale = 1.0 / static_cast<double>(batch.size());
  Trace tr;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const WeightedPair& wp = batch[b];
    check_weights(wp);
    const DropoutMasks* mk = masks.empty() ? nullptr : masks[b];
    run_forward(params, *wp.pair, mk, tr);
    out.loss += scale * pair_weighted_loss(tr, wp.token_weights, wp.pair->id);
    backward(params, tr, wp.token_weights, mk, scale, out.grads);
  }
  return out;
}

BatchGrad grad(const ModelParams& params, std::span<const WeightedPair> batch,
               bool dropout_active, Rng* rng) {
  if (!dropout_active) {
    return grad_masked(params, batch, {});
  }
  if (rng == nullptr) throw ValidationError("grad: dropout_active requires an rng");
  std::vector<DropoutMasks> storage;
  storage.reserve(batch.size());
  std::vector<const DropoutMasks*> ptrs;
  ptrs.reserve(batch.size());
  for (const WeightedPair& wp : batch) {
    if (wp.pair == nullptr) throw ValidationError("grad: null pair in batch");
    storage.push_back(sample_dropout_masks(params, wp.pair->source.size(),
                                           wp.pair->target.size() + 1, *rng));
  }
  for (const DropoutMasks& m : storage) ptrs.push_back(&m);
  return grad_masked(params, batch, ptrs);
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr) {
  const std::size_t total = params.w.total_size();
  if (grads.total_size() != total) {
    throw ValidationError("adam_step: gradient shape mismatch");
  }
  if (state.m.empty()) {
    state.m.assign(total, 0.0);
    state.v.assign(total, 0.0);
  } else if (state.m.size() != total || state.v.size() != total) {
    throw ValidationError("adam_step: optimizer state shape mismatch");
  }

  std::vector<std::vector<double>*> ptensors;
  params.w.for_each([&](std::vector<double>& t) { ptensors.push_back(&t); });
  std::vector<const std::vector<double>*> gtensors;
  grads.for_each([&](const std::vector<double>& t) { gtensors.push_back(&t); });

  state.step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));

  std::size_t off = 0;
  for (std::size_t k = 0; k < ptensors.size(); ++k) {
    std::vector<double>& p = *ptensors[k];
    const std::vector<double>& g = *gtensors[k];
    if (p.size() != g.size()) throw ValidationError("adam_step: tensor shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i, ++off) {
      const double gi = g[i];
      if (!std::isfinite(gi)) throw NumericError("adam_step: non-finite gradient");
      state.m[off] = kAdamBeta1 * state.m[off] + (1.0 - kAdamBeta1) * gi;
      state.v[off] = kAdamBeta2 * state.v[off] + (1.0 - kAdamBeta2) * gi * gi;
      const double mhat = state.m[off] / bc1;
      const double vhat = state.v[off] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
      if (!std::isfinite(p[i])) throw NumericError("adam_step: non-finite parameter");
    }
  }
}

TokenSeq greedy_decode(const ModelParams& params, const TokenSeq& source, std::size_t max_len) {
  check_sequence(source, params.dims.vocab_size, "source");
  const std::size_t H = params.dims.hidden_dim;
  const std::size_t V = params.dims.vocab_size;

  GruCache cache;
  std::vector<double> h(H, 0.0), next(H);
  const double* h_prev = nullptr;
  for (std::size_t t = 0; t < source.size(); ++t) {
    gru_step(params.w.enc_in, params.w.enc_rec, params.w.enc_bias,
             params.w.embedding.row(source[t]), h_prev, cache, next.data());
    h = next;
    h_prev = h.data();
  }

  TokenSeq out;
  std::vector<double> g = h, logits(V);
  TokenId prev = kBosToken;
  for (std::size_t step = 0; step < max_len; ++step) {
    gru_step(params.w.dec_in, params.w.dec_rec, params.w.dec_bias,
             params.w.embedding.row(prev), g.data(), cache, next.data());
    g = next;

    logits = params.w.out_bias;
    matvec_acc(params.w.out_proj, g.data(), logits.data());
    std::size_t best = 0;
    for (std::size_t v = 1; v < V; ++v) {
      if (logits[v] > logits[best]) best = v;  // ties keep the lowest id
    }
    if (best == kEosToken) break;
    out.push_back(static_cast<TokenId>(best));
    prev = static_cast<TokenId>(best);
  }
  return out;
}

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'E', 'Q', 'C', 'L', 'C', 'P', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  write_pod(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::ifstream& in) {
  std::uint64_t n = 0;
  read_pod(in, n);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open " + path + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(out, ckpt.params.dims.vocab_size);
  write_pod(out, ckpt.params.dims.embed_dim);
  write_pod(out, ckpt.params.dims.hidden_dim);
  write_pod(out, ckpt.params.dropout_rate);
  write_pod(out, ckpt.train_step);
  ckpt.params.w.for_each([&](const std::vector<double>& t) { write_doubles(out, t); });
  write_doubles(out, ckpt.opt.m);
  write_doubles(out, ckpt.opt.v);
  write_pod(out, ckpt.opt.step);
  if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ValidationError("load_checkpoint: not a checkpoint file: " + path);
  }
  ModelDims dims;
  double dropout = 0.0;
  std::uint64_t train_step = 0;
  read_pod(in, dims.vocab_size);
  read_pod(in, dims.embed_dim);
  read_pod(in, dims.hidden_dim);
  read_pod(in, dropout);
  read_pod(in, train_step);

  Checkpoint ckpt;
  ckpt.params = init_params(dims, dropout, 0);
  ckpt.train_step = train_step;
  bool shape_ok = true;
  ckpt.params.w.for_each([&](std::vector<double>& t) {
    std::vector<double> loaded = read_doubles(in);
    if (loaded.size() != t.size()) shape_ok = false;
    else t = std::move(loaded);
  });
  ckpt.opt.m = read_doubles(in);
  ckpt.opt.v = read_doubles(in);
  read_pod(in, ckpt.opt.step);
  if (!in || !shape_ok) {
    throw ValidationError("load_checkpoint: corrupt or truncated checkpoint: " + path);
  }
  return ckpt;
}

}  // namespace seqcl
