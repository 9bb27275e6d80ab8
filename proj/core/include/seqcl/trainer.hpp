#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqcl/corpus.hpp"
#include "seqcl/difficulty.hpp"
#include "seqcl/metrics.hpp"
#include "seqcl/model.hpp"
#include "seqcl/reweighter.hpp"
#include "seqcl/scheduler.hpp"

namespace seqcl {

// Flat config mirroring the CLI keys (section.key). Defaults are the desk
// scale: small model, 5k-pair corpus, a few minutes per 5-seed experiment.
struct TrainConfig {
  // corpus.*  (paths empty => generate synthetically)
  std::string train_path;
  std::string test_path;
  std::uint32_t vocab_size = 50;
  std::size_t n_train = 5000;
  std::size_t n_test = 500;
  std::uint64_t corpus_seed = 11;
  std::uint32_t min_len = 5;
  std::uint32_t max_len = 12;
  std::uint32_t min_corruptions = 0;
  std::uint32_t max_corruptions = 4;
  double sub_weight = 1.0;
  double del_weight = 1.0;
  double ins_weight = 1.0;
  double swap_weight = 1.0;
  std::uint32_t grammar_order = 2;

  // model.*
  std::uint32_t embed_dim = 32;
  std::uint32_t hidden_dim = 64;
  double dropout = 0.3;

  // optim.*  (effective learning rate = lr * lr_multiplier)
  double lr = 5e-5;
  double lr_multiplier = 20.0;
  std::uint32_t batch_tokens = 512;

  // curriculum.*
  bool curriculum_enabled = true;
  double c0 = 0.01;
  double k = 2.0;
  double t_fraction = 0.5;
  std::size_t floor = 0;  // 0 = one batch worth of pairs

  // instance_cl.*
  bool instance_enabled = true;
  std::uint32_t q = 5;
  double alpha_token = 1.0;
  double alpha_sentence = 1.0;

  // train.*
  std::uint64_t steps = 2000;
  std::uint32_t pilot_epochs = 1;
  std::uint64_t eval_every = 200;
  std::size_t decode_slack = 8;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t jobs = 0;  // 0 = hardware concurrency

  // output.*
  std::string output_dir;

  void validate() const;
  CorruptionConfig corruption_config() const;
  // Canonical "key = value" listing; echoed into run directories.
  std::string to_ini() const;
  std::string digest() const;
};

struct StepRecord {
  std::uint64_t step = 0;
  double competence = 1.0;
  std::size_t pool_size = 0;
  bool floor_engaged = false;
  double batch_loss = 0.0;
  double mean_weight = 1.0;
};

struct EvalRecord {
  std::uint64_t step = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_half = 0.0;
};

struct RunLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  EvalReport final_report;
  // Batch membership per step (train-corpus indices), kept for audits.
  std::vector<std::vector<std::uint32_t>> batches;
  std::vector<double> normalized_difficulty;
  double wall_seconds = 0.0;
  std::string config_digest;
};

struct TrainResult {
  ModelParams params;
  ModelParams pilot;
  AdamState opt;
  RunLog log;
  Corpus train_corpus;
  Corpus test_corpus;
};

// Full pipeline: pilot -> difficulty scoring -> curriculum training with
// optional MC-dropout reweighting -> periodic evaluation. Deterministic in
// (config, seed). When config.output_dir is set, writes config_effective.ini,
// runlog.jsonl, metrics.json, runmeta.json and checkpoint.bin there.
TrainResult train(const TrainConfig& config, std::uint64_t seed);

// The pilot phase alone: plain shuffled training on the full training corpus,
// starting from a fresh seeded init. This is what difficulty scoring uses.
ModelParams train_pilot(const TrainConfig& config, std::uint64_t seed);

struct DecodedEval {
  EvalReport report;
  std::vector<TokenSeq> hyps;
};

DecodedEval evaluate_decoded(const ModelParams& params, const Corpus& corpus,
                             std::size_t decode_slack);
EvalReport evaluate(const ModelParams& params, const Corpus& corpus, std::size_t decode_slack);

struct SeedRow {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
};

struct Aggregate {
  double mean_precision = 0.0, sd_precision = 0.0;
  double mean_recall = 0.0, sd_recall = 0.0;
  double mean_f = 0.0, sd_f = 0.0;
  std::size_t n_ok = 0;
  std::size_t n_total = 0;
};

struct ExperimentResult {
  std::vector<SeedRow> rows;
  Aggregate agg;
};

Aggregate aggregate(std::span<const SeedRow> rows);

// train + evaluate per seed (seeds may run concurrently; they share nothing).
// Per-seed failures land in their row; the aggregate covers successes only.
ExperimentResult run_experiment(const TrainConfig& config, std::span<const std::uint64_t> seeds);

struct AblationRow {
  std::string name;
  ExperimentResult result;
  double delta_f = 0.0;  // mean F0.5 minus the baseline row's mean F0.5
};

// {baseline, batch-only, instance-only, full} with all else equal.
std::vector<AblationRow> ablate(const TrainConfig& config, std::span<const std::uint64_t> seeds);

struct KSweepRow {
  std::optional<double> k;  // nullopt = no-curriculum baseline
  ExperimentResult result;
};

std::vector<KSweepRow> sweep_k(const TrainConfig& config, std::span<const double> ks,
                               std::span<const std::uint64_t> seeds);

// Comma-separated tables for external plotting.
void emit_competence_curve(const CompetenceSchedule& sched, std::uint64_t steps,
                           const std::string& path);
void emit_loss_curve(const RunLog& log, const std::string& path);
void emit_bin_deltas(std::span<const BinRow> bins, const std::string& path);

void save_runlog(const RunLog& log, const std::string& path);
// Reads back step and eval records (batch membership is not persisted).
RunLog load_runlog(const std::string& path);
std::string format_ablation(std::span<const AblationRow> rows);
std::string format_ksweep(std::span<const KSweepRow> rows);
std::string format_experiment(const ExperimentResult& result);

}  // namespace seqcl
