#include "seqcl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seqcl/errors.hpp"

namespace seqcl {

using nlohmann::json;

void CorruptionConfig::validate() const {
  // Two distinct real tokens are the minimum for substitution to always
  // have an alternative to draw.
  if (vocab_size < kFirstRealToken + 2) {
    throw ValidationError("CorruptionConfig.vocab_size: need at least " +
                          std::to_string(kFirstRealToken + 2) +
                          " (4 reserved ids plus two real tokens), got " +
                          std::to_string(vocab_size));
  }
  if (min_len == 0 || min_len > max_len) {
    throw ValidationError("CorruptionConfig.length_range: need 1 <= min <= max, got [" +
                          std::to_string(min_len) + "," + std::to_string(max_len) + "]");
  }
  if (min_corruptions > max_corruptions) {
    throw ValidationError("CorruptionConfig.corruption_count_range: min > max");
  }
  double total = 0.0;
  for (double w : op_weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw ValidationError("CorruptionConfig.op_weights: weights must be finite and non-negative");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw ValidationError("CorruptionConfig.op_weights: weights must have positive sum");
  }
  if (grammar_order == 0) {
    throw ValidationError("CorruptionConfig.grammar_order: must be >= 1");
  }
  double n_contexts = std::pow(double(vocab_size - kFirstRealToken), double(grammar_order));
  if (n_contexts > 4e6) {
    throw ValidationError("CorruptionConfig.grammar_order: context table too large (" +
                          std::to_string(std::size_t(n_contexts)) + " contexts)");
  }
}

MarkovGrammar::MarkovGrammar(std::uint32_t vocab_size, std::uint32_t order, std::uint64_t seed)
    : vocab_size_(vocab_size), order_(order), n_real_(vocab_size - kFirstRealToken) {
  n_contexts_ = 1;
  for (std::uint32_t i = 0; i < order_; ++i) n_contexts_ *= n_real_;
  // Two successors per context keep per-token entropy near one bit, so a
  // desk-scale model can actually learn the grammar well enough to spot and
  // fix corruptions.
  branch_ = std::min<std::uint32_t>(2, n_real_);

  succ_tokens_.resize(n_contexts_ * branch_);
  succ_weights_.resize(n_contexts_ * branch_);
  for (std::size_t c = 0; c < n_contexts_; ++c) {
    Rng rng(derive_seed(seed, "grammar-context", c));
    auto picks = rng.sample_without_replacement(n_real_, branch_);
    for (std::uint32_t b = 0; b < branch_; ++b) {
      succ_tokens_[c * branch_ + b] = kFirstRealToken + static_cast<TokenId>(picks[b]);
      succ_weights_[c * branch_ + b] = 0.5 + rng.uniform01();
    }
  }

  // Stationary next-token marginal by power iteration over context states.
  std::vector<double> pi(n_contexts_, 1.0 / double(n_contexts_));
  std::vector<double> next(n_contexts_, 0.0);
  for (int iter = 0; iter < 100; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t c = 0; c < n_contexts_; ++c) {
      if (pi[c] == 0.0) continue;
      double wsum = 0.0;
      for (std::uint32_t b = 0; b < branch_; ++b) wsum += succ_weights_[c * branch_ + b];
      for (std::uint32_t b = 0; b < branch_; ++b) {
        TokenId tok = succ_tokens_[c * branch_ + b];
        // Context shift: drop the oldest token, append the new one.
        std::size_t nc = (c % (n_contexts_ / n_real_)) * n_real_ + (tok - kFirstRealToken);
        next[nc] += pi[c] * succ_weights_[c * branch_ + b] / wsum;
      }
    }
    pi.swap(next);
  }
  marginal_.assign(n_real_, 0.0);
  for (std::size_t c = 0; c < n_contexts_; ++c) {
    marginal_[c % n_real_] += pi[c];  // last token of the context tuple
  }
  double msum = 0.0;
  for (double m : marginal_) msum += m;
  for (double& m : marginal_) m /= msum;
}

std::size_t MarkovGrammar::context_index(std::span<const TokenId> ctx) const {
  std::size_t idx = 0;
  for (TokenId t : ctx) idx = idx * n_real_ + (t - kFirstRealToken);
  return idx;
}

TokenId MarkovGrammar::sample_marginal(Rng& rng) const {
  return kFirstRealToken + static_cast<TokenId>(rng.weighted_choice(marginal_));
}

TokenSeq MarkovGrammar::sample_sentence(std::uint32_t length, Rng& rng) const {
  TokenSeq out;
  out.reserve(length);
  for (std::uint32_t i = 0; i < std::min(length, order_); ++i) {
    out.push_back(sample_marginal(rng));
  }
  while (out.size() < length) {
    std::span<const TokenId> ctx(out.data() + out.size() - order_, order_);
    std::size_t c = context_index(ctx);
    std::span<const double> w(succ_weights_.data() + c * branch_, branch_);
    out.push_back(succ_tokens_[c * branch_ + rng.weighted_choice(w)]);
  }
  return out;
}

std::pair<TokenSeq, std::uint32_t> corrupt(const TokenSeq& target,
                                           const CorruptionConfig& config,
                                           const MarkovGrammar& grammar, Rng& rng) {
  TokenSeq work = target;
  const std::uint32_t k = static_cast<std::uint32_t>(
      rng.uniform_int(config.min_corruptions, config.max_corruptions));
  std::uint32_t applied = 0;
  int attempts = 0;
  while (applied < k && attempts < 1000) {
    ++attempts;
    auto op = static_cast<CorruptOp>(rng.weighted_choice(config.op_weights));
    switch (op) {
      case CorruptOp::kSubstitute: {
        std::size_t pos = static_cast<std::size_t>(rng.below(work.size()));
        TokenId orig = work[pos];
        TokenId repl = orig;
        for (int tries = 0; repl == orig && tries < 1000; ++tries) {
          repl = grammar.sample_marginal(rng);
        }
        if (repl == orig) {
          repl = kFirstRealToken + (orig - kFirstRealToken + 1) %
                                       (config.vocab_size - kFirstRealToken);
        }
        work[pos] = repl;
        ++applied;
        break;
      }
      case CorruptOp::kDelete: {
        if (work.size() <= 1) continue;  // never empty the sentence
        std::size_t pos = static_cast<std::size_t>(rng.below(work.size()));
        work.erase(work.begin() + static_cast<std::ptrdiff_t>(pos));
        ++applied;
        break;
      }
      case CorruptOp::kInsert: {
        std::size_t pos = static_cast<std::size_t>(rng.below(work.size() + 1));
        work.insert(work.begin() + static_cast<std::ptrdiff_t>(pos), grammar.sample_marginal(rng));
        ++applied;
        break;
      }
      case CorruptOp::kSwapAdjacent: {
        if (work.size() < 2) continue;
        std::size_t pos = static_cast<std::size_t>(rng.below(work.size() - 1));
        std::swap(work[pos], work[pos + 1]);
        ++applied;
        break;
      }
    }
  }
  return {std::move(work), applied};
}

Corpus generate_corpus(const CorruptionConfig& config, std::size_t n, std::uint64_t seed) {
  config.validate();
  if (n < 1) throw ValidationError("generate_corpus: n must be >= 1");

  MarkovGrammar grammar(config.vocab_size, config.grammar_order, derive_seed(seed, "grammar"));

  Corpus corpus;
  corpus.vocab_size = config.vocab_size;
  corpus.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "pair", i));
    auto len = static_cast<std::uint32_t>(rng.uniform_int(config.min_len, config.max_len));
    TokenSeq target = grammar.sample_sentence(len, rng);
    auto [source, applied] = corrupt(target, config, grammar, rng);
    corpus.pairs.push_back(SentencePair{
        .id = i, .source = std::move(source), .target = std::move(target),
        .num_corruptions = applied});
  }
  return corpus;
}

namespace {

TokenSeq parse_token_array(const json& j, const char* field, std::uint32_t vocab_size,
                           std::size_t line_no) {
  if (!j.contains(field)) {
    throw ValidationError("line " + std::to_string(line_no) + ": missing field \"" +
                          field + "\"");
  }
  const json& arr = j.at(field);
  if (!arr.is_array() || arr.empty()) {
    throw ValidationError("line " + std::to_string(line_no) + ": field \"" + field +
                          "\" must be a non-empty array");
  }
  TokenSeq out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      throw ValidationError("line " + std::to_string(line_no) + ": non-integer token in \"" +
                            field + "\"");
    }
    std::int64_t t = v.get<std::int64_t>();
    if (t < 0 || t >= std::int64_t(vocab_size)) {
      throw ValidationError("line " + std::to_string(line_no) + ": token id " +
                            std::to_string(t) + " out of range for vocab size " +
                            std::to_string(vocab_size));
    }
    out.push_back(static_cast<TokenId>(t));
  }
  return out;
}

}  // namespace

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_corpus: cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  Corpus corpus;

  auto parse_line = [&](const std::string& text) -> json {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed record");
    }
    return j;
  };

  if (!std::getline(in, line)) throw ValidationError("line 1: missing header record");
  line_no = 1;
  json header = parse_line(line);
  if (!header.contains("vocab_size") || !header["vocab_size"].is_number_unsigned()) {
    throw ValidationError("line 1: header must carry an unsigned \"vocab_size\"");
  }
  if (!header.contains("format_version") || header["format_version"].get<int>() != 1) {
    throw ValidationError("line 1: unsupported format_version");
  }
  corpus.vocab_size = header["vocab_size"].get<std::uint32_t>();

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = parse_line(line);
    SentencePair pair;
    if (!j.contains("id") || !j["id"].is_number_unsigned()) {
      throw ValidationError("line " + std::to_string(line_no) + ": missing field \"id\"");
    }
    pair.id = j["id"].get<std::uint64_t>();
    pair.source = parse_token_array(j, "source", corpus.vocab_size, line_no);
    pair.target = parse_token_array(j, "target", corpus.vocab_size, line_no);
    if (j.contains("num_corruptions")) {
      pair.num_corruptions = j["num_corruptions"].get<std::uint32_t>();
    }
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_corpus: cannot open " + path + " for writing");

  out << json{{"format_version", 1}, {"vocab_size", corpus.vocab_size}}.dump() << '\n';
  for (const SentencePair& p : corpus.pairs) {
    json j{{"id", p.id}, {"source", p.source}, {"target", p.target}};
    if (p.num_corruptions) j["num_corruptions"] = *p.num_corruptions;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("save_corpus: write failed for " + path);
}

}  // namespace seqcl
