#include "seqcl/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "seqcl/errors.hpp"

namespace seqcl {

using nlohmann::json;

std::vector<double> score_corpus(const ModelParams& pilot, const Corpus& corpus) {
  std::vector<double> raw;
  raw.reserve(corpus.pairs.size());
  for (const SentencePair& pair : corpus.pairs) {
    try {
      raw.push_back(nll_loss(forward_teacher_forced(pilot, pair, false, nullptr)));
    } catch (const ValidationError& e) {
      throw ValidationError("pair " + std::to_string(pair.id) + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("pair " + std::to_string(pair.id) + ": " + e.what());
    }
  }
  return raw;
}

std::vector<double> cdf_normalize(std::span<const double> raw) {
  if (raw.empty()) throw ValidationError("cdf_normalize: need at least one score");
  for (double r : raw) {
    if (!std::isfinite(r)) throw ValidationError("cdf_normalize: non-finite score");
  }
  std::vector<double> sorted(raw.begin(), raw.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(raw.size());
  std::vector<double> normalized(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto rank = std::upper_bound(sorted.begin(), sorted.end(), raw[i]) - sorted.begin();
    normalized[i] = static_cast<double>(rank) / n;
  }
  return normalized;
}

std::vector<DifficultyScore> score_and_normalize(const ModelParams& pilot, const Corpus& corpus) {
  std::vector<double> raw = score_corpus(pilot, corpus);
  std::vector<double> normalized = cdf_normalize(raw);
  std::vector<DifficultyScore> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = DifficultyScore{corpus.pairs[i].id, raw[i], normalized[i]};
  }
  return out;
}

void save_difficulty(std::span<const DifficultyScore> scores, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_difficulty: cannot open " + path + " for writing");
  for (const DifficultyScore& s : scores) {
    out << json{{"id", s.pair_id}, {"raw", s.raw}, {"normalized", s.normalized}}.dump() << '\n';
  }
  if (!out) throw IoError("save_difficulty: write failed for " + path);
}

std::vector<DifficultyScore> load_difficulty(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_difficulty: cannot open " + path);
  std::vector<DifficultyScore> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id") || !j.contains("raw") || !j.contains("normalized")) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed difficulty record");
    }
    out.push_back(DifficultyScore{j["id"].get<std::uint64_t>(), j["raw"].get<double>(),
                                  j["normalized"].get<double>()});
  }
  return out;
}

}  // namespace seqcl
