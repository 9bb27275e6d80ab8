#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqcl/corpus.hpp"

namespace seqcl {

// A span replacement on the source: tokens [start, end) become `replacement`.
// start == end encodes an insertion; an empty replacement a deletion.
struct Edit {
  std::size_t start = 0;
  std::size_t end = 0;
  TokenSeq replacement;

  bool operator==(const Edit&) const = default;
};

// Minimal unit-cost Levenshtein alignment; tie order substitution, insertion,
// deletion, placed leftmost; adjacent non-match operations merge into one
// span edit. apply_edits(source, result) reconstructs `other`.
std::vector<Edit> extract_edits(const TokenSeq& source, const TokenSeq& other);

// Right-to-left span replacement. Edits must be sorted, non-overlapping and
// in range, else ValidationError.
TokenSeq apply_edits(const TokenSeq& source, std::span<const Edit> edits);

struct BinRow {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  bool empty = true;
  double baseline_f = 0.0;
  double treatment_f = 0.0;
  double delta = 0.0;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_half = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::vector<BinRow> bins;  // filled by difficulty_bin_report users
};

// Corpus-level precision/recall/F0.5 from per-sentence edit sets. An edit
// matches iff (start, end, replacement) are all equal; 0/0 ratios score 1.
EvalReport prf(const std::vector<std::vector<Edit>>& hyp_edits,
               const std::vector<std::vector<Edit>>& gold_edits);

double f_beta(double precision, double recall, double beta);

// Partitions test pairs into equal-width difficulty intervals over (0, 1] and
// scores baseline and treatment hypotheses inside each bin. Empty bins are
// flagged rather than reported as zero.
std::vector<BinRow> difficulty_bin_report(std::span<const double> scores,
                                          const std::vector<TokenSeq>& baseline_hyps,
                                          const std::vector<TokenSeq>& treatment_hyps,
                                          const Corpus& gold, std::size_t bins);

std::string report_to_json(const EvalReport& report);
std::string format_report(const EvalReport& report);

void save_bin_rows_json(std::span<const BinRow> bins, const std::string& path);
std::vector<BinRow> load_bin_rows_json(const std::string& path);

}  // namespace seqcl
