// Command-line front end: corpus generation, pilot training, difficulty
// scoring, curriculum training, evaluation, the ablation grid, the k sweep
// and plot-data export. A single flat config file of dotted keys feeds every
// subcommand; any key can be overridden by a flag of the same name.
//
// Exit codes: 0 success, 1 validation/usage error, 2 runtime or numeric error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqcl/corpus.hpp"
#include "seqcl/difficulty.hpp"
#include "seqcl/errors.hpp"
#include "seqcl/metrics.hpp"
#include "seqcl/model.hpp"
#include "seqcl/scheduler.hpp"
#include "seqcl/trainer.hpp"

namespace {

using seqcl::TrainConfig;
using seqcl::ValidationError;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoull(item));
  }
  if (out.empty()) throw ValidationError("train.seeds: empty seed list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError(key + ": expected a boolean, got \"" + v + "\"");
}

// Registers every TrainConfig key both as a CLI flag (--section.key) and as a
// config-file setter, so the file and the command line stay in lockstep.
struct KeyBinder {
  CLI::App* cmd = nullptr;
  TrainConfig* cfg = nullptr;
  std::map<std::string, std::function<void(const std::string&)>> setters;
  std::string seeds_text;  // staging for the comma-separated seed list

  void bind_all() {
    add_str("corpus.train_path", cfg->train_path, "training corpus file (empty = generate)");
    add_str("corpus.test_path", cfg->test_path, "test corpus file (empty = generate)");
    add_u32("corpus.vocab_size", cfg->vocab_size, "vocabulary size incl. 4 reserved ids");
    add_size("corpus.n_train", cfg->n_train, "generated training pairs");
    add_size("corpus.n_test", cfg->n_test, "generated held-out pairs");
    add_u64("corpus.seed", cfg->corpus_seed, "data seed (shared across training seeds)");
    add_u32("corpus.min_len", cfg->min_len, "min clean-target length");
    add_u32("corpus.max_len", cfg->max_len, "max clean-target length");
    add_u32("corpus.min_corruptions", cfg->min_corruptions, "min edits per sentence");
    add_u32("corpus.max_corruptions", cfg->max_corruptions, "max edits per sentence");
    add_dbl("corpus.sub_weight", cfg->sub_weight, "substitute op weight");
    add_dbl("corpus.del_weight", cfg->del_weight, "delete op weight");
    add_dbl("corpus.ins_weight", cfg->ins_weight, "insert op weight");
    add_dbl("corpus.swap_weight", cfg->swap_weight, "swap-adjacent op weight");
    add_u32("corpus.grammar_order", cfg->grammar_order, "Markov grammar order");
    add_u32("model.embed_dim", cfg->embed_dim, "embedding width");
    add_u32("model.hidden_dim", cfg->hidden_dim, "recurrent state width");
    add_dbl("model.dropout", cfg->dropout, "dropout rate in [0,1)");
    add_dbl("optim.lr", cfg->lr, "base learning rate");
    add_dbl("optim.lr_multiplier", cfg->lr_multiplier, "desk-scale learning-rate multiplier");
    add_u32("optim.batch_tokens", cfg->batch_tokens, "batch size in target tokens");
    add_bool("curriculum.enabled", cfg->curriculum_enabled, "batch-level curriculum on/off");
    add_dbl("curriculum.c0", cfg->c0, "initial competence");
    add_dbl("curriculum.k", cfg->k, "competence growth exponent");
    add_dbl("curriculum.t_fraction", cfg->t_fraction, "curriculum length as fraction of steps");
    add_size("curriculum.floor", cfg->floor, "minimum pool size (0 = one batch)");
    add_bool("instance_cl.enabled", cfg->instance_enabled, "instance-level reweighting on/off");
    add_u32("instance_cl.q", cfg->q, "MC dropout passes per pair");
    add_dbl("instance_cl.alpha_token", cfg->alpha_token, "token-level weight scale");
    add_dbl("instance_cl.alpha_sentence", cfg->alpha_sentence, "sentence-level weight scale");
    add_u64("train.steps", cfg->steps, "main training steps");
    add_u32("train.pilot_epochs", cfg->pilot_epochs, "pilot epochs before scoring");
    add_u64("train.eval_every", cfg->eval_every, "steps between held-out evals (0 = final only)");
    add_size("train.decode_slack", cfg->decode_slack, "extra decode length beyond source");
    add_size("train.jobs", cfg->jobs, "concurrent seed runs (0 = hardware)");
    add_str("output.dir", cfg->output_dir, "run output directory");

    cmd->add_option("--train.seeds", seeds_text, "comma-separated seed list");
    setters["train.seeds"] = [this](const std::string& v) { cfg->seeds = parse_seed_list(v); };
  }

  void finish() {
    if (!seeds_text.empty()) cfg->seeds = parse_seed_list(seeds_text);
  }

 private:
  void add_str(const std::string& key, std::string& field, const std::string& desc) {
    cmd->add_option("--" + key, field, desc);
    setters[key] = [&field](const std::string& v) { field = v; };
  }
  void add_dbl(const std::string& key, double& field, const std::string& desc) {
    cmd->add_option("--" + key, field, desc);
    setters[key] = [&field, key](const std::string& v) {
      try { field = std::stod(v); }
      catch (...) { throw ValidationError(key + ": expected a number, got \"" + v + "\""); }
    };
  }
  void add_u32(const std::string& key, std::uint32_t& field, const std::string& desc) {
    cmd->add_option("--" + key, field, desc);
    setters[key] = [&field, key](const std::string& v) {
      try { field = static_cast<std::uint32_t>(std::stoul(v)); }
      catch (...) { throw ValidationError(key + ": expected an integer, got \"" + v + "\""); }
    };
  }
  void add_u64(const std::string& key, std::uint64_t& field, const std::string& desc) {
    cmd->add_option("--" + key, field, desc);
    setters[key] = [&field, key](const std::string& v) {
      try { field = std::stoull(v); }
      catch (...) { throw ValidationError(key + ": expected an integer, got \"" + v + "\""); }
    };
  }
  void add_size(const std::string& key, std::size_t& field, const std::string& desc) {
    cmd->add_option("--" + key, field, desc);
    setters[key] = [&field, key](const std::string& v) {
      try { field = static_cast<std::size_t>(std::stoull(v)); }
      catch (...) { throw ValidationError(key + ": expected an integer, got \"" + v + "\""); }
    };
  }
  void add_bool(const std::string& key, bool& field, const std::string& desc) {
    cmd->add_option("--" + key, field, desc);
    setters[key] = [&field, key](const std::string& v) { field = parse_bool(v, key); };
  }
};

void apply_config_file(const std::string& path, KeyBinder& binder) {
  std::ifstream in(path);
  if (!in) throw seqcl::IoError("config file not found: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    auto it = binder.setters.find(key);
    if (it == binder.setters.end()) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": unknown key \"" + key + "\"");
    }
    it->second(value);
  }
}

// The config file must apply before flag overrides, so it is pre-scanned from
// raw argv rather than handled inside the CLI11 parse.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

seqcl::CompetenceSchedule schedule_of(const TrainConfig& cfg) {
  return seqcl::CompetenceSchedule{
      cfg.c0, cfg.k,
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(
                                     cfg.t_fraction * static_cast<double>(cfg.steps))))};
}

void write_bin_report(const TrainConfig& cfg, std::uint64_t seed, const std::string& out_dir,
                      std::size_t bins) {
  TrainConfig base_cfg = cfg;
  base_cfg.curriculum_enabled = false;
  base_cfg.instance_enabled = false;
  base_cfg.output_dir.clear();
  TrainConfig full_cfg = cfg;
  full_cfg.curriculum_enabled = true;
  full_cfg.instance_enabled = true;
  full_cfg.output_dir.clear();

  seqcl::TrainResult base = seqcl::train(base_cfg, seed);
  seqcl::TrainResult full = seqcl::train(full_cfg, seed);

  std::vector<double> test_norm =
      seqcl::cdf_normalize(seqcl::score_corpus(full.pilot, full.test_corpus));
  auto base_eval = seqcl::evaluate_decoded(base.params, base.test_corpus, cfg.decode_slack);
  auto full_eval = seqcl::evaluate_decoded(full.params, full.test_corpus, cfg.decode_slack);
  std::vector<seqcl::BinRow> rows = seqcl::difficulty_bin_report(
      test_norm, base_eval.hyps, full_eval.hyps, full.test_corpus, bins);

  std::filesystem::create_directories(out_dir);
  seqcl::save_bin_rows_json(rows, out_dir + "/bins.json");
  seqcl::emit_bin_deltas(rows, out_dir + "/bins.csv");
  std::printf("bin report (seed %llu): baseline F0.5=%.4f  full F0.5=%.4f\n",
              static_cast<unsigned long long>(seed), base_eval.report.f_half,
              full_eval.report.f_half);
}

int run(int argc, char** argv) {
  CLI::App app{"curriculum-learning training engine for synthetic sequence correction"};
  app.require_subcommand(1);

  TrainConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* sub, KeyBinder& binder) {
    sub->add_option("--config", config_path, "flat key = value config file");
    binder.cmd = sub;
    binder.cfg = &cfg;
    binder.bind_all();
  };

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "generate a synthetic correction corpus");
  KeyBinder gen_binder;
  add_common(gen_cmd, gen_binder);
  std::string gen_out = "corpus.jsonl";
  std::size_t gen_n = 5000;
  std::uint64_t gen_seed = 11;
  gen_cmd->add_option("--out", gen_out, "output corpus path");
  gen_cmd->add_option("--n", gen_n, "number of pairs");
  gen_cmd->add_option("--seed", gen_seed, "generation seed");

  // pilot
  auto* pilot_cmd = app.add_subcommand("pilot", "train the pilot model and write a checkpoint");
  KeyBinder pilot_binder;
  add_common(pilot_cmd, pilot_binder);
  std::string pilot_out = "pilot.ckpt";
  std::uint64_t pilot_seed = 0;
  bool pilot_seed_set = false;
  pilot_cmd->add_option("--out", pilot_out, "checkpoint output path");
  pilot_cmd->add_option("--seed", pilot_seed, "training seed (default: first of train.seeds)")
      ->each([&](const std::string&) { pilot_seed_set = true; });

  // score
  auto* score_cmd = app.add_subcommand("score", "score a corpus with a pilot checkpoint");
  KeyBinder score_binder;
  add_common(score_cmd, score_binder);
  std::string score_ckpt, score_corpus_path, score_out = "difficulty.jsonl";
  score_cmd->add_option("--checkpoint", score_ckpt, "pilot checkpoint")->required();
  score_cmd->add_option("--corpus", score_corpus_path, "corpus to score")->required();
  score_cmd->add_option("--out", score_out, "difficulty file output path");

  // train
  auto* train_cmd = app.add_subcommand("train", "run the full curriculum training pipeline");
  KeyBinder train_binder;
  add_common(train_cmd, train_binder);
  std::uint64_t train_seed = 0;
  bool train_seed_set = false;
  train_cmd->add_option("--seed", train_seed, "training seed (default: first of train.seeds)")
      ->each([&](const std::string&) { train_seed_set = true; });

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "greedy-decode a corpus and score edits");
  KeyBinder eval_binder;
  add_common(eval_cmd, eval_binder);
  std::string eval_ckpt, eval_corpus_path, eval_json;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--corpus", eval_corpus_path, "corpus to evaluate")->required();
  eval_cmd->add_option("--json", eval_json, "also write the machine-readable report here");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "run {baseline, batch, instance, full}");
  KeyBinder ablate_binder;
  add_common(ablate_cmd, ablate_binder);
  std::string ablate_bins_out;
  std::size_t ablate_bins = 10;
  ablate_cmd->add_option("--bins-out", ablate_bins_out,
                         "also write a difficulty-bin delta report (two extra runs) here");
  ablate_cmd->add_option("--bins", ablate_bins, "number of difficulty bins");

  // sweep-k
  auto* sweep_cmd = app.add_subcommand("sweep-k", "full-CL experiment per growth exponent k");
  KeyBinder sweep_binder;
  add_common(sweep_cmd, sweep_binder);
  std::string sweep_ks = "1,2,3,4,5";
  sweep_cmd->add_option("--ks", sweep_ks, "comma-separated k values");

  // plot-data
  auto* plot_cmd = app.add_subcommand("plot-data", "emit CSV tables for external plotting");
  KeyBinder plot_binder;
  add_common(plot_cmd, plot_binder);
  std::string plot_out_dir = "plots";
  std::string plot_runlog, plot_bins;
  plot_cmd->add_option("--out-dir", plot_out_dir, "CSV output directory");
  plot_cmd->add_option("--runlog", plot_runlog, "runlog.jsonl to convert into a loss curve");
  plot_cmd->add_option("--bins-json", plot_bins, "bins.json to convert into bins.csv");

  // Config file first, flags second.
  const std::string pre_config = find_config_arg(argc, argv);
  if (!pre_config.empty()) {
    KeyBinder file_binder;
    CLI::App dummy;
    file_binder.cmd = &dummy;
    file_binder.cfg = &cfg;
    file_binder.bind_all();
    apply_config_file(pre_config, file_binder);
  }

  app.parse(argc, argv);
  for (KeyBinder* b : {&gen_binder, &pilot_binder, &score_binder, &train_binder, &eval_binder,
                       &ablate_binder, &sweep_binder, &plot_binder}) {
    b->finish();
  }

  if (gen_cmd->parsed()) {
    seqcl::Corpus corpus = seqcl::generate_corpus(cfg.corruption_config(), gen_n, gen_seed);
    seqcl::save_corpus(corpus, gen_out);
    std::printf("wrote %zu pairs to %s\n", corpus.pairs.size(), gen_out.c_str());
    return 0;
  }

  if (pilot_cmd->parsed()) {
    const std::uint64_t seed = pilot_seed_set ? pilot_seed : cfg.seeds.at(0);
    seqcl::ModelParams pilot = seqcl::train_pilot(cfg, seed);
    seqcl::save_checkpoint(seqcl::Checkpoint{pilot, {}, 0}, pilot_out);
    std::printf("wrote pilot checkpoint to %s\n", pilot_out.c_str());
    return 0;
  }

  if (score_cmd->parsed()) {
    seqcl::Checkpoint ckpt = seqcl::load_checkpoint(score_ckpt);
    seqcl::Corpus corpus = seqcl::load_corpus(score_corpus_path);
    auto scores = seqcl::score_and_normalize(ckpt.params, corpus);
    seqcl::save_difficulty(scores, score_out);
    std::printf("wrote %zu difficulty records to %s\n", scores.size(), score_out.c_str());
    return 0;
  }

  if (train_cmd->parsed()) {
    const std::uint64_t seed = train_seed_set ? train_seed : cfg.seeds.at(0);
    if (cfg.output_dir.empty()) cfg.output_dir = "out/train-seed" + std::to_string(seed);
    seqcl::TrainResult result = seqcl::train(cfg, seed);
    std::printf("seed %llu final: %s\n", static_cast<unsigned long long>(seed),
                seqcl::format_report(result.log.final_report).c_str());
    std::printf("outputs in %s\n", cfg.output_dir.c_str());
    return 0;
  }

  if (eval_cmd->parsed()) {
    seqcl::Checkpoint ckpt = seqcl::load_checkpoint(eval_ckpt);
    seqcl::Corpus corpus = seqcl::load_corpus(eval_corpus_path);
    seqcl::EvalReport report = seqcl::evaluate(ckpt.params, corpus, cfg.decode_slack);
    std::printf("%s\n", seqcl::format_report(report).c_str());
    if (!eval_json.empty()) {
      std::ofstream out(eval_json);
      if (!out) throw seqcl::IoError("cannot open " + eval_json + " for writing");
      out << seqcl::report_to_json(report) << '\n';
    }
    return 0;
  }

  if (ablate_cmd->parsed()) {
    if (cfg.output_dir.empty()) cfg.output_dir = "out/ablate";
    auto rows = seqcl::ablate(cfg, cfg.seeds);
    std::printf("%s", seqcl::format_ablation(rows).c_str());
    if (!ablate_bins_out.empty()) {
      write_bin_report(cfg, cfg.seeds.at(0), ablate_bins_out, ablate_bins);
    }
    return 0;
  }

  if (sweep_cmd->parsed()) {
    if (cfg.output_dir.empty()) cfg.output_dir = "out/sweep-k";
    std::vector<double> ks = parse_double_list(sweep_ks);
    if (ks.empty()) throw ValidationError("sweep-k: --ks must list at least one value");
    auto rows = seqcl::sweep_k(cfg, ks, cfg.seeds);
    std::printf("%s", seqcl::format_ksweep(rows).c_str());
    return 0;
  }

  if (plot_cmd->parsed()) {
    std::filesystem::create_directories(plot_out_dir);
    seqcl::emit_competence_curve(schedule_of(cfg), cfg.steps, plot_out_dir + "/competence.csv");
    if (!plot_runlog.empty()) {
      seqcl::RunLog log = seqcl::load_runlog(plot_runlog);
      seqcl::emit_loss_curve(log, plot_out_dir + "/loss.csv");
    }
    if (!plot_bins.empty()) {
      auto bins = seqcl::load_bin_rows_json(plot_bins);
      seqcl::emit_bin_deltas(bins, plot_out_dir + "/bins.csv");
    }
    std::printf("wrote plot data to %s\n", plot_out_dir.c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    CLI::App dummy;
    const int code = dummy.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const seqcl::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const seqcl::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
