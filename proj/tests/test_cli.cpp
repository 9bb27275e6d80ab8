#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "seqcl/corpus.hpp"
#include "seqcl/difficulty.hpp"
#include "seqcl/trainer.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = SEQCL_CLI_PATH;

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / "seqcl_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small but real end-to-end settings.
std::string tiny_flags() {
  return "--corpus.vocab_size 16 --corpus.n_train 200 --corpus.n_test 40 "
         "--corpus.min_len 4 --corpus.max_len 7 --corpus.max_corruptions 2 "
         "--model.embed_dim 8 --model.hidden_dim 12 --optim.batch_tokens 96 "
         "--optim.lr_multiplier 40 --train.steps 12 --train.eval_every 0 "
         "--instance_cl.q 2 --train.seeds 1 --train.jobs 1";
}

}  // namespace

TEST_CASE("generate writes a loadable corpus") {
  Sandbox sb;
  const std::string out = sb.path("corpus.jsonl");
  const int code = run_cli("generate --out " + out +
                           " --n 50 --seed 3 --corpus.vocab_size 16 --corpus.min_len 4 "
                           "--corpus.max_len 7");
  REQUIRE(code == 0);
  seqcl::Corpus corpus = seqcl::load_corpus(out);
  CHECK(corpus.pairs.size() == 50);
  CHECK(corpus.vocab_size == 16);
}

TEST_CASE("generate rejects invalid settings with exit code 1") {
  Sandbox sb;
  const int code = run_cli("generate --out " + sb.path("bad.jsonl") +
                           " --n 10 --corpus.min_len 9 --corpus.max_len 3");
  CHECK(code == 1);
}

TEST_CASE("unknown subcommands and flags exit with code 1") {
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("generate --no-such-flag 1") == 1);
}

TEST_CASE("pilot then score produce a difficulty file") {
  Sandbox sb;
  const std::string corpus = sb.path("corpus.jsonl");
  REQUIRE(run_cli("generate --out " + corpus + " --n 80 --seed 3 --corpus.vocab_size 16 "
                  "--corpus.min_len 4 --corpus.max_len 7") == 0);

  const std::string ckpt = sb.path("pilot.ckpt");
  REQUIRE(run_cli("pilot " + tiny_flags() + " --corpus.train_path " + corpus +
                  " --corpus.test_path " + corpus + " --out " + ckpt) == 0);
  REQUIRE(fs::exists(ckpt));

  const std::string diff = sb.path("difficulty.jsonl");
  REQUIRE(run_cli("score --checkpoint " + ckpt + " --corpus " + corpus + " --out " + diff) == 0);
  auto scores = seqcl::load_difficulty(diff);
  CHECK(scores.size() == 80);
  for (const auto& s : scores) {
    CHECK(s.normalized > 0.0);
    CHECK(s.normalized <= 1.0);
  }
}

TEST_CASE("train runs the pipeline and evaluate reads its checkpoint back") {
  Sandbox sb;
  const std::string out_dir = sb.path("run");
  REQUIRE(run_cli("train " + tiny_flags() + " --output.dir " + out_dir + " --seed 1") == 0);
  for (const char* name :
       {"config_effective.ini", "runlog.jsonl", "metrics.json", "checkpoint.bin"}) {
    CHECK(fs::exists(out_dir + "/" + std::string(name)));
  }

  const std::string corpus = sb.path("eval_corpus.jsonl");
  REQUIRE(run_cli("generate --out " + corpus + " --n 30 --seed 9 --corpus.vocab_size 16 "
                  "--corpus.min_len 4 --corpus.max_len 7") == 0);
  CHECK(run_cli("evaluate --checkpoint " + out_dir + "/checkpoint.bin --corpus " + corpus +
                " --json " + sb.path("report.json")) == 0);
  CHECK(fs::exists(sb.path("report.json")));

  CHECK(run_cli("evaluate --checkpoint /nonexistent.ckpt --corpus " + corpus) == 2);
}

TEST_CASE("config file keys apply and command-line flags override them") {
  Sandbox sb;
  const std::string cfg_path = sb.path("run.cfg");
  {
    std::ofstream cfg(cfg_path);
    cfg << "# tiny run\n";
    cfg << "corpus.vocab_size = 16\n";
    cfg << "corpus.n_train = 200\n";
    cfg << "corpus.n_test = 40\n";
    cfg << "corpus.min_len = 4\n";
    cfg << "corpus.max_len = 7\n";
    cfg << "model.embed_dim = 8\n";
    cfg << "model.hidden_dim = 12\n";
    cfg << "optim.batch_tokens = 96\n";
    cfg << "train.steps = 30\n";
    cfg << "train.eval_every = 0\n";
    cfg << "instance_cl.q = 2\n";
    cfg << "train.seeds = 1\n";
    cfg << "train.jobs = 1\n";
  }
  const std::string out_dir = sb.path("cfg_run");
  REQUIRE(run_cli("train --config " + cfg_path + " --train.steps 10 --output.dir " + out_dir) ==
          0);

  seqcl::RunLog log = seqcl::load_runlog(out_dir + "/runlog.jsonl");
  CHECK(log.steps.size() == 10);  // flag beat the file's 30

  std::ifstream ini(out_dir + "/config_effective.ini");
  std::string text((std::istreambuf_iterator<char>(ini)), std::istreambuf_iterator<char>());
  CHECK(text.find("train.steps = 10") != std::string::npos);
  CHECK(text.find("corpus.vocab_size = 16") != std::string::npos);
}

TEST_CASE("unknown config keys are a validation error") {
  Sandbox sb;
  const std::string cfg_path = sb.path("bad.cfg");
  {
    std::ofstream cfg(cfg_path);
    cfg << "corpus.vocab_sizee = 16\n";
  }
  CHECK(run_cli("train --config " + cfg_path) == 1);
}

TEST_CASE("plot-data emits the CSV tables") {
  Sandbox sb;
  const std::string out_dir = sb.path("run");
  REQUIRE(run_cli("train " + tiny_flags() + " --output.dir " + out_dir + " --seed 1") == 0);

  const std::string plots = sb.path("plots");
  REQUIRE(run_cli("plot-data " + tiny_flags() + " --runlog " + out_dir +
                  "/runlog.jsonl --out-dir " + plots) == 0);
  CHECK(fs::exists(plots + "/competence.csv"));
  CHECK(fs::exists(plots + "/loss.csv"));
}

TEST_CASE("ablate and sweep-k print their tables") {
  Sandbox sb;
  const std::string flags =
      "--corpus.vocab_size 16 --corpus.n_train 120 --corpus.n_test 24 "
      "--corpus.min_len 4 --corpus.max_len 7 --corpus.max_corruptions 2 "
      "--model.embed_dim 8 --model.hidden_dim 12 --optim.batch_tokens 96 "
      "--train.steps 8 --train.eval_every 0 --instance_cl.q 2 --train.seeds 1 "
      "--train.jobs 2";
  CHECK(run_cli("ablate " + flags + " --output.dir " + sb.path("ablate")) == 0);
  CHECK(fs::exists(sb.path("ablate") + "/full/seed1/metrics.json"));

  CHECK(run_cli("sweep-k " + flags + " --ks 2 --output.dir " + sb.path("sweep")) == 0);
  CHECK(fs::exists(sb.path("sweep") + "/k2/seed1/metrics.json"));
}
