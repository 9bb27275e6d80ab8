#include "seqcl/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "seqcl/errors.hpp"

namespace seqcl {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
  if (train_path.empty() != test_path.empty()) {
    throw ValidationError("corpus paths: set both corpus.train_path and corpus.test_path, or neither");
  }
  if (!train_path.empty()) {
    if (!fs::exists(train_path)) throw ValidationError("corpus.train_path not found: " + train_path);
    if (!fs::exists(test_path)) throw ValidationError("corpus.test_path not found: " + test_path);
  } else {
    corruption_config().validate();
    if (n_train < 1 || n_test < 1) {
      throw ValidationError("corpus.n_train and corpus.n_test must be >= 1");
    }
  }
  if (embed_dim == 0 || hidden_dim == 0) {
    throw ValidationError("model dims must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ValidationError("model.dropout must lie in [0, 1)");
  }
  if (!(lr > 0.0) || !(lr_multiplier > 0.0)) {
    throw ValidationError("optim.lr and optim.lr_multiplier must be positive");
  }
  if (batch_tokens < 1) throw ValidationError("optim.batch_tokens must be >= 1");
  if (!(c0 > 0.0 && c0 <= 1.0)) throw ValidationError("curriculum.c0 must lie in (0, 1]");
  if (!(k >= 1.0)) throw ValidationError("curriculum.k must be >= 1");
  if (!(t_fraction > 0.0 && t_fraction <= 1.0)) {
    throw ValidationError("curriculum.t_fraction must lie in (0, 1]");
  }
  if (q < 1) throw ValidationError("instance_cl.q must be >= 1");
  if (alpha_token < 0.0 || alpha_sentence < 0.0) {
    throw ValidationError("instance_cl alpha scales must be >= 0");
  }
  if (steps < 1) throw ValidationError("train.steps must be >= 1");
  if (seeds.empty()) throw ValidationError("train.seeds must be non-empty");
}

CorruptionConfig TrainConfig::corruption_config() const {
  CorruptionConfig c;
  c.vocab_size = vocab_size;
  c.min_len = min_len;
  c.max_len = max_len;
  c.min_corruptions = min_corruptions;
  c.max_corruptions = max_corruptions;
  c.op_weights = {sub_weight, del_weight, ins_weight, swap_weight};
  c.grammar_order = grammar_order;
  return c;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string TrainConfig::to_ini() const {
  std::ostringstream os;
  os << "corpus.train_path = " << train_path << '\n';
  os << "corpus.test_path = " << test_path << '\n';
  os << "corpus.vocab_size = " << vocab_size << '\n';
  os << "corpus.n_train = " << n_train << '\n';
  os << "corpus.n_test = " << n_test << '\n';
  os << "corpus.seed = " << corpus_seed << '\n';
  os << "corpus.min_len = " << min_len << '\n';
  os << "corpus.max_len = " << max_len << '\n';
  os << "corpus.min_corruptions = " << min_corruptions << '\n';
  os << "corpus.max_corruptions = " << max_corruptions << '\n';
  os << "corpus.sub_weight = " << fmt_double(sub_weight) << '\n';
  os << "corpus.del_weight = " << fmt_double(del_weight) << '\n';
  os << "corpus.ins_weight = " << fmt_double(ins_weight) << '\n';
  os << "corpus.swap_weight = " << fmt_double(swap_weight) << '\n';
  os << "corpus.grammar_order = " << grammar_order << '\n';
  os << "model.embed_dim = " << embed_dim << '\n';
  os << "model.hidden_dim = " << hidden_dim << '\n';
  os << "model.dropout = " << fmt_double(dropout) << '\n';
  os << "optim.lr = " << fmt_double(lr) << '\n';
  os << "optim.lr_multiplier = " << fmt_double(lr_multiplier) << '\n';
  os << "optim.batch_tokens = " << batch_tokens << '\n';
  os << "curriculum.enabled = " << (curriculum_enabled ? "true" : "false") << '\n';
  os << "curriculum.c0 = " << fmt_double(c0) << '\n';
  os << "curriculum.k = " << fmt_double(k) << '\n';
  os << "curriculum.t_fraction = " << fmt_double(t_fraction) << '\n';
  os << "curriculum.floor = " << floor << '\n';
  os << "instance_cl.enabled = " << (instance_enabled ? "true" : "false") << '\n';
  os << "instance_cl.q = " << q << '\n';
  os << "instance_cl.alpha_token = " << fmt_double(alpha_token) << '\n';
  os << "instance_cl.alpha_sentence = " << fmt_double(alpha_sentence) << '\n';
  os << "train.steps = " << steps << '\n';
  os << "train.pilot_epochs = " << pilot_epochs << '\n';
  os << "train.eval_every = " << eval_every << '\n';
  os << "train.decode_slack = " << decode_slack << '\n';
  os << "train.seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << '\n';
  os << "train.jobs = " << jobs << '\n';
  os << "output.dir = " << output_dir << '\n';
  return os.str();
}

std::string TrainConfig::digest() const {
  // Environment-only keys (where outputs land, how many workers) do not
  // change what a run computes, so they stay out of the digest.
  std::istringstream lines(to_ini());
  std::string line;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  while (std::getline(lines, line)) {
    if (line.rfind("output.dir", 0) == 0 || line.rfind("train.jobs", 0) == 0) continue;
    for (char c : line) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= '\n';
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

struct Corpora {
  Corpus train;
  Corpus test;
};

Corpora acquire_corpora(const TrainConfig& config) {
  Corpora c;
  if (!config.train_path.empty()) {
    c.train = load_corpus(config.train_path);
    c.test = load_corpus(config.test_path);
    if (c.train.vocab_size != c.test.vocab_size) {
      throw ValidationError("train and test corpora disagree on vocab size");
    }
  } else {
    const CorruptionConfig cc = config.corruption_config();
    c.train = generate_corpus(cc, config.n_train, config.corpus_seed);
    c.test = generate_corpus(cc, config.n_test, derive_seed(config.corpus_seed, "test-split"));
  }
  return c;
}

std::size_t pairs_per_batch(const Corpus& corpus, std::uint32_t batch_tokens) {
  std::size_t total_tokens = 0;
  for (const SentencePair& p : corpus.pairs) total_tokens += p.target.size() + 1;
  const std::size_t n = corpus.pairs.size();
  std::size_t ppb = (static_cast<std::size_t>(batch_tokens) * n) / std::max<std::size_t>(1, total_tokens);
  return std::clamp<std::size_t>(ppb, 1, n);
}

// One pass of plain shuffled training; used for the pilot.
void pilot_train(ModelParams& params, AdamState& opt, const Corpus& corpus,
                 const TrainConfig& config, std::uint64_t seed, std::size_t ppb) {
  const double lr_eff = config.lr * config.lr_multiplier;
  const bool use_dropout = params.dropout_rate > 0.0;
  std::uint64_t step = 0;
  for (std::uint32_t epoch = 0; epoch < config.pilot_epochs; ++epoch) {
    std::vector<std::size_t> order(corpus.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(seed, "pilot-shuffle", epoch));
    shuffle_rng.shuffle(order);
    for (std::size_t off = 0; off < order.size(); off += ppb, ++step) {
      const std::size_t take = std::min(ppb, order.size() - off);
      std::vector<WeightedPair> batch(take);
      for (std::size_t b = 0; b < take; ++b) {
        batch[b].pair = &corpus.pairs[order[off + b]];
      }
      Rng drop_rng(derive_seed(seed, "pilot-dropout", step));
      BatchGrad bg = grad(params, batch, use_dropout, use_dropout ? &drop_rng : nullptr);
      adam_step(params, bg.grads, opt, lr_eff);
    }
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

json report_json(const EvalReport& r) {
  return json{{"precision", r.precision}, {"recall", r.recall}, {"f_half", r.f_half},
              {"tp", r.tp},               {"fp", r.fp},         {"fn", r.fn}};
}

void write_run_outputs(const TrainConfig& config, std::uint64_t seed, const RunLog& log,
                       const ModelParams& params, const AdamState& opt) {
  fs::create_directories(config.output_dir);
  write_text_file(config.output_dir + "/config_effective.ini",
                  config.to_ini() + "run.seed = " + std::to_string(seed) + "\n");
  save_runlog(log, config.output_dir + "/runlog.jsonl");

  json metrics{{"config_digest", log.config_digest},
               {"seed", seed},
               {"steps", log.steps.size()},
               {"final", report_json(log.final_report)}};
  json evals = json::array();
  for (const EvalRecord& e : log.evals) {
    evals.push_back(json{{"step", e.step}, {"precision", e.precision},
                         {"recall", e.recall}, {"f_half", e.f_half}});
  }
  metrics["evals"] = evals;
  write_text_file(config.output_dir + "/metrics.json", metrics.dump(2) + "\n");

  write_text_file(config.output_dir + "/runmeta.json",
                  json{{"wall_seconds", log.wall_seconds}}.dump(2) + "\n");
  save_checkpoint(Checkpoint{params, opt, log.steps.size()},
                  config.output_dir + "/checkpoint.bin");
}

}  // namespace

ModelParams train_pilot(const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  Corpora corpora = acquire_corpora(config);
  ModelDims dims{corpora.train.vocab_size, config.embed_dim, config.hidden_dim};
  ModelParams pilot = init_params(dims, config.dropout, derive_seed(seed, "pilot-init"));
  AdamState opt;
  pilot_train(pilot, opt, corpora.train, config, seed,
              pairs_per_batch(corpora.train, config.batch_tokens));
  return pilot;
}

DecodedEval evaluate_decoded(const ModelParams& params, const Corpus& corpus,
                             std::size_t decode_slack) {
  if (params.dims.vocab_size != corpus.vocab_size) {
    throw ValidationError("evaluate: checkpoint vocab size " +
                          std::to_string(params.dims.vocab_size) +
                          " != corpus vocab size " + std::to_string(corpus.vocab_size));
  }
  DecodedEval out;
  out.hyps.reserve(corpus.pairs.size());
  std::vector<std::vector<Edit>> hyp_edits, gold_edits;
  hyp_edits.reserve(corpus.pairs.size());
  gold_edits.reserve(corpus.pairs.size());
  for (const SentencePair& pair : corpus.pairs) {
    TokenSeq hyp = greedy_decode(params, pair.source, pair.source.size() + decode_slack);
    hyp_edits.push_back(extract_edits(pair.source, hyp));
    gold_edits.push_back(extract_edits(pair.source, pair.target));
    out.hyps.push_back(std::move(hyp));
  }
  out.report = prf(hyp_edits, gold_edits);
  return out;
}

EvalReport evaluate(const ModelParams& params, const Corpus& corpus, std::size_t decode_slack) {
  return evaluate_decoded(params, corpus, decode_slack).report;
}

TrainResult train(const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  const auto t_begin = std::chrono::steady_clock::now();

  Corpora corpora = acquire_corpora(config);
  const Corpus& train_corpus = corpora.train;

  ModelDims dims{train_corpus.vocab_size, config.embed_dim, config.hidden_dim};
  const std::size_t ppb = pairs_per_batch(train_corpus, config.batch_tokens);
  const std::size_t floor =
      config.floor > 0 ? config.floor : std::min(ppb, train_corpus.pairs.size());
  if (floor > train_corpus.pairs.size()) {
    throw ValidationError("curriculum.floor exceeds the training corpus size");
  }
  const double lr_eff = config.lr * config.lr_multiplier;
  const bool use_dropout = config.dropout > 0.0;

  // Stage 1: pilot on the full corpus in random order.
  ModelParams pilot = init_params(dims, config.dropout, derive_seed(seed, "pilot-init"));
  {
    AdamState pilot_opt;
    pilot_train(pilot, pilot_opt, train_corpus, config, seed, ppb);
  }

  // Stage 2: difficulty scores, frozen for the whole run.
  std::vector<double> raw = score_corpus(pilot, train_corpus);
  std::vector<double> normalized = cdf_normalize(raw);

  // Stage 3: curriculum training.
  CompetenceSchedule sched{config.c0, config.k,
                           std::max<std::uint64_t>(
                               1, static_cast<std::uint64_t>(std::llround(
                                      config.t_fraction * static_cast<double>(config.steps))))};
  TrainResult result;
  result.pilot = pilot;
  result.params = init_params(dims, config.dropout, derive_seed(seed, "main-init"));
  result.log.normalized_difficulty = normalized;
  result.log.config_digest = config.digest();

  std::vector<std::size_t> all_indices(train_corpus.pairs.size());
  for (std::size_t i = 0; i < all_indices.size(); ++i) all_indices[i] = i;

  for (std::uint64_t t = 0; t < config.steps; ++t) {
    double c = 1.0;
    Pool pool;
    if (config.curriculum_enabled) {
      c = competence(sched, t);
      pool = available_pool(normalized, c, floor);
    } else {
      pool.indices = all_indices;
    }

    Rng batch_rng(derive_seed(seed, "batch", t));
    std::vector<std::size_t> batch_idx = next_batch(pool.indices, ppb, batch_rng);

    std::vector<WeightedPair> batch(batch_idx.size());
    for (std::size_t b = 0; b < batch_idx.size(); ++b) {
      batch[b].pair = &train_corpus.pairs[batch_idx[b]];
    }

    double weight_sum = 0.0;
    std::size_t weight_count = 0;
    if (config.instance_enabled) {
      std::vector<UncertaintyStats> stats;
      stats.reserve(batch.size());
      for (std::size_t b = 0; b < batch.size(); ++b) {
        Rng mc_rng(derive_seed(seed, "mc", t, b));
        stats.push_back(mc_dropout_stats(result.params, *batch[b].pair, config.q, mc_rng));
      }
      std::vector<InstanceWeights> weights =
          compute_weights(stats, config.alpha_token, config.alpha_sentence);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        batch[b].token_weights = weights[b].effective();
        for (double w : batch[b].token_weights) weight_sum += w;
        weight_count += batch[b].token_weights.size();
      }
    } else {
      for (const WeightedPair& wp : batch) {
        weight_sum += static_cast<double>(wp.pair->target.size() + 1);
        weight_count += wp.pair->target.size() + 1;
      }
    }

    Rng drop_rng(derive_seed(seed, "train-dropout", t));
    BatchGrad bg = grad(result.params, batch, use_dropout, use_dropout ? &drop_rng : nullptr);
    adam_step(result.params, bg.grads, result.opt, lr_eff);

    result.log.steps.push_back(StepRecord{
        t, c, pool.indices.size(), pool.floor_engaged, bg.loss,
        weight_count ? weight_sum / static_cast<double>(weight_count) : 1.0});
    result.log.batches.emplace_back(batch_idx.begin(), batch_idx.end());

    if (config.eval_every > 0 && (t + 1) % config.eval_every == 0 && t + 1 < config.steps) {
      EvalReport rep = evaluate(result.params, corpora.test, config.decode_slack);
      result.log.evals.push_back(EvalRecord{t + 1, rep.precision, rep.recall, rep.f_half});
    }
  }

  result.log.final_report = evaluate(result.params, corpora.test, config.decode_slack);
  if (config.eval_every > 0 && config.steps % config.eval_every == 0) {
    const EvalReport& rep = result.log.final_report;
    result.log.evals.push_back(EvalRecord{config.steps, rep.precision, rep.recall, rep.f_half});
  }

  result.log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  result.train_corpus = std::move(corpora.train);
  result.test_corpus = std::move(corpora.test);

  if (!config.output_dir.empty()) {
    write_run_outputs(config, seed, result.log, result.params, result.opt);
  }
  return result;
}

Aggregate aggregate(std::span<const SeedRow> rows) {
  Aggregate agg;
  agg.n_total = rows.size();
  std::vector<double> ps, rs, fs;
  for (const SeedRow& row : rows) {
    if (!row.ok) continue;
    ps.push_back(row.report.precision);
    rs.push_back(row.report.recall);
    fs.push_back(row.report.f_half);
  }
  agg.n_ok = ps.size();
  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) { mean = sd = 0.0; return; }
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    sd = std::sqrt(acc / static_cast<double>(v.size()));
  };
  mean_sd(ps, agg.mean_precision, agg.sd_precision);
  mean_sd(rs, agg.mean_recall, agg.sd_recall);
  mean_sd(fs, agg.mean_f, agg.sd_f);
  return agg;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (jobs == 0) jobs = std::max<unsigned>(1, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    }));
  }
  for (auto& f : workers) f.get();
}

}  // namespace

ExperimentResult run_experiment(const TrainConfig& config, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ValidationError("run_experiment: need at least one seed");
  config.validate();

  ExperimentResult result;
  result.rows.resize(seeds.size());
  parallel_for(seeds.size(), config.jobs, [&](std::size_t i) {
    SeedRow& row = result.rows[i];
    row.seed = seeds[i];
    try {
      TrainConfig per_seed = config;
      if (!config.output_dir.empty()) {
        per_seed.output_dir = config.output_dir + "/seed" + std::to_string(seeds[i]);
      }
      TrainResult tr = train(per_seed, seeds[i]);
      row.report = tr.log.final_report;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });
  result.agg = aggregate(result.rows);
  return result;
}

std::vector<AblationRow> ablate(const TrainConfig& config, std::span<const std::uint64_t> seeds) {
  struct Variant {
    const char* name;
    bool curriculum;
    bool instance;
  };
  const Variant variants[] = {{"baseline", false, false},
                              {"batch-only", true, false},
                              {"instance-only", false, true},
                              {"full", true, true}};
  std::vector<AblationRow> rows;
  for (const Variant& v : variants) {
    TrainConfig c = config;
    c.curriculum_enabled = v.curriculum;
    c.instance_enabled = v.instance;
    if (!config.output_dir.empty()) c.output_dir = config.output_dir + "/" + v.name;
    AblationRow row;
    row.name = v.name;
    row.result = run_experiment(c, seeds);
    rows.push_back(std::move(row));
  }
  for (AblationRow& row : rows) {
    row.delta_f = row.result.agg.mean_f - rows[0].result.agg.mean_f;
  }
  return rows;
}

std::vector<KSweepRow> sweep_k(const TrainConfig& config, std::span<const double> ks,
                               std::span<const std::uint64_t> seeds) {
  for (double k : ks) {
    if (!(k >= 1.0)) throw ValidationError("sweep_k: every k must be >= 1");
  }
  std::vector<KSweepRow> rows;
  {
    TrainConfig c = config;
    c.curriculum_enabled = false;
    c.instance_enabled = false;
    if (!config.output_dir.empty()) c.output_dir = config.output_dir + "/baseline";
    rows.push_back(KSweepRow{std::nullopt, run_experiment(c, seeds)});
  }
  for (double k : ks) {
    TrainConfig c = config;
    c.curriculum_enabled = true;
    c.instance_enabled = true;
    c.k = k;
    if (!config.output_dir.empty()) {
      std::ostringstream os;
      os << config.output_dir << "/k" << k;
      c.output_dir = os.str();
    }
    rows.push_back(KSweepRow{k, run_experiment(c, seeds)});
  }
  return rows;
}

void emit_competence_curve(const CompetenceSchedule& sched, std::uint64_t steps,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("emit_competence_curve: cannot open " + path);
  out << "step,competence\n";
  out << std::setprecision(17);
  for (std::uint64_t t = 0; t < steps; ++t) {
    out << t << ',' << competence(sched, t) << '\n';
  }
  if (!out) throw IoError("emit_competence_curve: write failed for " + path);
}

void emit_loss_curve(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("emit_loss_curve: cannot open " + path);
  out << "step,competence,pool_size,floor_engaged,batch_loss,mean_weight\n";
  out << std::setprecision(17);
  for (const StepRecord& s : log.steps) {
    out << s.step << ',' << s.competence << ',' << s.pool_size << ','
        << (s.floor_engaged ? 1 : 0) << ',' << s.batch_loss << ',' << s.mean_weight << '\n';
  }
  if (!out) throw IoError("emit_loss_curve: write failed for " + path);
}

void emit_bin_deltas(std::span<const BinRow> bins, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("emit_bin_deltas: cannot open " + path);
  out << "lo,hi,count,baseline_f,treatment_f,delta\n";
  out << std::setprecision(17);
  for (const BinRow& b : bins) {
    out << b.lo << ',' << b.hi << ',' << b.count << ',';
    if (b.empty) {
      out << ",,\n";
    } else {
      out << b.baseline_f << ',' << b.treatment_f << ',' << b.delta << '\n';
    }
  }
  if (!out) throw IoError("emit_bin_deltas: write failed for " + path);
}

void save_runlog(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_runlog: cannot open " + path);
  out << json{{"type", "meta"}, {"config_digest", log.config_digest}}.dump() << '\n';
  for (const StepRecord& s : log.steps) {
    out << json{{"type", "step"},       {"step", s.step},
                {"competence", s.competence}, {"pool_size", s.pool_size},
                {"floor_engaged", s.floor_engaged}, {"batch_loss", s.batch_loss},
                {"mean_weight", s.mean_weight}}
               .dump()
        << '\n';
  }
  for (const EvalRecord& e : log.evals) {
    out << json{{"type", "eval"},
                {"step", e.step},
                {"precision", e.precision},
                {"recall", e.recall},
                {"f_half", e.f_half}}
               .dump()
        << '\n';
  }
  if (!out) throw IoError("save_runlog: write failed for " + path);
}

RunLog load_runlog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_runlog: cannot open " + path);
  RunLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("type")) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed runlog record");
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "meta") {
      log.config_digest = j.value("config_digest", "");
    } else if (type == "step") {
      log.steps.push_back(StepRecord{j["step"].get<std::uint64_t>(),
                                     j["competence"].get<double>(),
                                     j["pool_size"].get<std::size_t>(),
                                     j["floor_engaged"].get<bool>(),
                                     j["batch_loss"].get<double>(),
                                     j["mean_weight"].get<double>()});
    } else if (type == "eval") {
      log.evals.push_back(EvalRecord{j["step"].get<std::uint64_t>(),
                                     j["precision"].get<double>(),
                                     j["recall"].get<double>(),
                                     j["f_half"].get<double>()});
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown record type " + type);
    }
  }
  return log;
}

namespace {

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v * 100.0;
  return os.str();
}

}  // namespace

std::string format_experiment(const ExperimentResult& result) {
  std::ostringstream os;
  for (const SeedRow& row : result.rows) {
    os << "  seed " << row.seed << ": ";
    if (row.ok) {
      os << "P=" << pct(row.report.precision) << " R=" << pct(row.report.recall)
         << " F0.5=" << pct(row.report.f_half) << '\n';
    } else {
      os << "FAILED: " << row.error << '\n';
    }
  }
  os << "  mean: P=" << pct(result.agg.mean_precision) << "±" << pct(result.agg.sd_precision)
     << " R=" << pct(result.agg.mean_recall) << "±" << pct(result.agg.sd_recall)
     << " F0.5=" << pct(result.agg.mean_f) << "±" << pct(result.agg.sd_f) << "  (" << result.agg.n_ok
     << "/" << result.agg.n_total << " seeds ok)\n";
  return os.str();
}

std::string format_ablation(std::span<const AblationRow> rows) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "method" << std::right << std::setw(8) << "F0.5"
     << std::setw(10) << "delta" << std::setw(12) << "seeds\n";
  for (const AblationRow& row : rows) {
    os << std::left << std::setw(16) << row.name << std::right << std::setw(8)
       << pct(row.result.agg.mean_f) << std::setw(9) << (row.delta_f >= 0 ? "+" : "")
       << pct(row.delta_f) << std::setw(8) << row.result.agg.n_ok << "/"
       << row.result.agg.n_total << '\n';
  }
  return os.str();
}

std::string format_ksweep(std::span<const KSweepRow> rows) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "k" << std::right << std::setw(8) << "F0.5"
     << std::setw(8) << "sd\n";
  for (const KSweepRow& row : rows) {
    std::ostringstream name;
    if (row.k) name << *row.k; else name << "baseline";
    os << std::left << std::setw(12) << name.str() << std::right << std::setw(8)
       << pct(row.result.agg.mean_f) << std::setw(8) << pct(row.result.agg.sd_f) << '\n';
  }
  return os.str();
}

}  // namespace seqcl
