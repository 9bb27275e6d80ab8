#include "seqcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "seqcl/errors.hpp"

namespace seqcl {

using nlohmann::json;

namespace {

enum class AlignOp : unsigned char { kMatch, kSubstitute, kInsert, kDelete };

// Full DP table with a traceback that prefers match, then substitution, then
// insertion, then deletion. Walking backward with matches greedy pushes the
// non-match operations toward the front, which places ambiguous edits
// leftmost.
std::vector<AlignOp> align(const TokenSeq& src, const TokenSeq& dst) {
  const std::size_t n = src.size(), m = dst.size();
  std::vector<std::uint32_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t sub = at(i - 1, j - 1) + (src[i - 1] == dst[j - 1] ? 0 : 1);
      const std::uint32_t ins = at(i, j - 1) + 1;
      const std::uint32_t del = at(i - 1, j) + 1;
      at(i, j) = std::min({sub, ins, del});
    }
  }

  std::vector<AlignOp> ops;
  ops.reserve(n + m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && src[i - 1] == dst[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      ops.push_back(AlignOp::kMatch);
      --i; --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      ops.push_back(AlignOp::kSubstitute);
      --i; --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ops.push_back(AlignOp::kInsert);
      --j;
    } else {
      ops.push_back(AlignOp::kDelete);
      --i;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

}  // namespace

std::vector<Edit> extract_edits(const TokenSeq& source, const TokenSeq& other) {
  std::vector<AlignOp> ops = align(source, other);

  std::vector<Edit> edits;
  std::size_t i = 0, j = 0;
  std::size_t k = 0;
  while (k < ops.size()) {
    if (ops[k] == AlignOp::kMatch) {
      ++i; ++j; ++k;
      continue;
    }
    // Maximal run of non-match operations becomes one span edit.
    const std::size_t i0 = i, j0 = j;
    while (k < ops.size() && ops[k] != AlignOp::kMatch) {
      switch (ops[k]) {
        case AlignOp::kSubstitute: ++i; ++j; break;
        case AlignOp::kInsert: ++j; break;
        case AlignOp::kDelete: ++i; break;
        case AlignOp::kMatch: break;
      }
      ++k;
    }
    edits.push_back(Edit{i0, i, TokenSeq(other.begin() + static_cast<std::ptrdiff_t>(j0),
                                         other.begin() + static_cast<std::ptrdiff_t>(j))});
  }
  return edits;
}

TokenSeq apply_edits(const TokenSeq& source, std::span<const Edit> edits) {
  std::size_t prev_start = std::numeric_limits<std::size_t>::max();
  for (std::size_t e = edits.size(); e-- > 0;) {
    const Edit& ed = edits[e];
    if (ed.start > ed.end || ed.end > source.size()) {
      throw ValidationError("apply_edits: edit span out of range");
    }
    if (e + 1 < edits.size() && ed.end > prev_start) {
      throw ValidationError("apply_edits: edits overlap or are unsorted");
    }
    prev_start = ed.start;
  }

  TokenSeq out = source;
  for (std::size_t e = edits.size(); e-- > 0;) {
    const Edit& ed = edits[e];
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(ed.start),
              out.begin() + static_cast<std::ptrdiff_t>(ed.end));
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(ed.start), ed.replacement.begin(),
               ed.replacement.end());
  }
  return out;
}

double f_beta(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

EvalReport prf(const std::vector<std::vector<Edit>>& hyp_edits,
               const std::vector<std::vector<Edit>>& gold_edits) {
  if (hyp_edits.size() != gold_edits.size()) {
    throw ValidationError("prf: hypothesis and gold sentence counts differ (" +
                          std::to_string(hyp_edits.size()) + " vs " +
                          std::to_string(gold_edits.size()) + ")");
  }
  EvalReport rep;
  for (std::size_t s = 0; s < hyp_edits.size(); ++s) {
    std::uint64_t matched = 0;
    for (const Edit& h : hyp_edits[s]) {
      for (const Edit& g : gold_edits[s]) {
        if (h == g) { ++matched; break; }
      }
    }
    rep.tp += matched;
    rep.fp += hyp_edits[s].size() - matched;
    rep.fn += gold_edits[s].size() - matched;
  }
  rep.precision = (rep.tp + rep.fp == 0) ? 1.0
                                         : static_cast<double>(rep.tp) /
                                               static_cast<double>(rep.tp + rep.fp);
  rep.recall = (rep.tp + rep.fn == 0) ? 1.0
                                      : static_cast<double>(rep.tp) /
                                            static_cast<double>(rep.tp + rep.fn);
  rep.f_half = f_beta(rep.precision, rep.recall, 0.5);
  return rep;
}

std::vector<BinRow> difficulty_bin_report(std::span<const double> scores,
                                          const std::vector<TokenSeq>& baseline_hyps,
                                          const std::vector<TokenSeq>& treatment_hyps,
                                          const Corpus& gold, std::size_t bins) {
  const std::size_t n = gold.pairs.size();
  if (scores.size() != n || baseline_hyps.size() != n || treatment_hyps.size() != n) {
    throw ValidationError("difficulty_bin_report: misaligned inputs");
  }
  if (bins < 2) throw ValidationError("difficulty_bin_report: bins must be >= 2");

  std::vector<std::vector<std::size_t>> members(bins);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scores[i];
    if (!(s > 0.0 && s <= 1.0)) {
      throw ValidationError("difficulty_bin_report: score outside (0, 1]");
    }
    auto b = static_cast<std::size_t>(
        std::ceil(s * static_cast<double>(bins)) - 1.0);
    members[std::min(b, bins - 1)].push_back(i);
  }

  std::vector<BinRow> rows(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    BinRow& row = rows[b];
    row.lo = static_cast<double>(b) / static_cast<double>(bins);
    row.hi = static_cast<double>(b + 1) / static_cast<double>(bins);
    row.count = members[b].size();
    row.empty = members[b].empty();
    if (row.empty) continue;

    std::vector<std::vector<Edit>> base, treat, ref;
    for (std::size_t i : members[b]) {
      const SentencePair& pair = gold.pairs[i];
      base.push_back(extract_edits(pair.source, baseline_hyps[i]));
      treat.push_back(extract_edits(pair.source, treatment_hyps[i]));
      ref.push_back(extract_edits(pair.source, pair.target));
    }
    row.baseline_f = prf(base, ref).f_half;
    row.treatment_f = prf(treat, ref).f_half;
    row.delta = row.treatment_f - row.baseline_f;
  }
  return rows;
}

std::string report_to_json(const EvalReport& report) {
  json j{{"precision", report.precision}, {"recall", report.recall},
         {"f_half", report.f_half},       {"tp", report.tp},
         {"fp", report.fp},               {"fn", report.fn}};
  if (!report.bins.empty()) {
    json rows = json::array();
    for (const BinRow& b : report.bins) {
      json row{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}};
      if (b.empty) {
        row["empty"] = true;
      } else {
        row["baseline_f"] = b.baseline_f;
        row["treatment_f"] = b.treatment_f;
        row["delta"] = b.delta;
      }
      rows.push_back(row);
    }
    j["bins"] = rows;
  }
  return j.dump();
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os << "P=" << report.precision << " R=" << report.recall << " F0.5=" << report.f_half
     << "  (tp=" << report.tp << " fp=" << report.fp << " fn=" << report.fn << ")";
  return os.str();
}

void save_bin_rows_json(std::span<const BinRow> bins, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_bin_rows_json: cannot open " + path + " for writing");
  for (const BinRow& b : bins) {
    json row{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"empty", b.empty}};
    if (!b.empty) {
      row["baseline_f"] = b.baseline_f;
      row["treatment_f"] = b.treatment_f;
      row["delta"] = b.delta;
    }
    out << row.dump() << '\n';
  }
  if (!out) throw IoError("save_bin_rows_json: write failed for " + path);
}

std::vector<BinRow> load_bin_rows_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_bin_rows_json: cannot open " + path);
  std::vector<BinRow> bins;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("lo") || !j.contains("hi") || !j.contains("empty")) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed bin record");
    }
    BinRow b;
    b.lo = j["lo"].get<double>();
    b.hi = j["hi"].get<double>();
    b.count = j.value("count", std::size_t{0});
    b.empty = j["empty"].get<bool>();
    if (!b.empty) {
      b.baseline_f = j["baseline_f"].get<double>();
      b.treatment_f = j["treatment_f"].get<double>();
      b.delta = j["delta"].get<double>();
    }
    bins.push_back(b);
  }
  return bins;
}

}  // namespace seqcl
