#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqcl/corpus.hpp"
#include "seqcl/model.hpp"

namespace seqcl {

struct DifficultyScore {
  std::uint64_t pair_id = 0;
  double raw = 0.0;         // pilot-model NLL
  double normalized = 0.0;  // empirical-CDF rank in (0, 1]
};

// Pilot NLL per pair (dropout inactive), in corpus order.
std::vector<double> score_corpus(const ModelParams& pilot, const Corpus& corpus);

// Empirical CDF: normalized_i = |{j : raw_j <= raw_i}| / N. The hardest score
// maps to exactly 1; ties share their max rank.
std::vector<double> cdf_normalize(std::span<const double> raw);

std::vector<DifficultyScore> score_and_normalize(const ModelParams& pilot, const Corpus& corpus);

// Line-delimited records {"id", "raw", "normalized"}.
void save_difficulty(std::span<const DifficultyScore> scores, const std::string& path);
std::vector<DifficultyScore> load_difficulty(const std::string& path);

}  // namespace seqcl
