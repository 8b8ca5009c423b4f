#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "rmt/cli.hpp"
#include "rmt/corpus.hpp"
#include "rmt/reward.hpp"
#include "test_util.hpp"

using namespace rmt;
using namespace rmt::testutil;

namespace {

int run(std::vector<std::string> args) {
  std::vector<const char*> argv;
  argv.push_back("rmt");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string write_demo_corpus(const TempDir& tmp, std::size_t per_direction = 12) {
  const CorpusSet c =
      synthetic_corpus({{"de", "en"}, {"fr", "en"}, {"en", "zh"}}, per_direction);
  const std::string path = tmp.path("pairs.jsonl");
  save_corpus_jsonl(c, path);
  return path;
}

}  // namespace

TEST_CASE("unknown subcommands exit 1 with usage semantics") {
  CHECK(run({"frobnicate"}) == 1);
  CHECK(run({}) == 1);
}

TEST_CASE("--help exits 0") {
  CHECK(run({"--help"}) == 0);
}

TEST_CASE("corpus load validates and normalizes; runtime errors exit 2") {
  TempDir tmp("cli");
  const std::string pairs = write_demo_corpus(tmp);
  CHECK(run({"corpus", "load", "--in", pairs, "--out", tmp.path("norm.jsonl")}) == 0);
  CHECK(run({"corpus", "load", "--in", tmp.path("missing.jsonl"), "--out",
             tmp.path("x.jsonl")}) == 2);
}

TEST_CASE("corpus split is reproducible under a fixed seed") {
  TempDir tmp("cli");
  const std::string pairs = write_demo_corpus(tmp);
  auto split_once = [&](const std::string& tag) {
    REQUIRE(run({"corpus", "split", "--in", pairs, "--train-out", tmp.path(tag + ".train"),
                 "--val-out", tmp.path(tag + ".val"), "--ratio", "0.9", "--seed", "7"}) == 0);
  };
  split_once("a");
  split_once("b");
  CHECK(slurp(tmp.path("a.train")) == slurp(tmp.path("b.train")));
  CHECK(slurp(tmp.path("a.val")) == slurp(tmp.path("b.val")));
  CHECK_FALSE(slurp(tmp.path("a.train")).empty());
}

TEST_CASE("corpus sample/filter/stats/similarity run end to end") {
  TempDir tmp("cli");
  const std::string pairs = write_demo_corpus(tmp);
  CHECK(run({"corpus", "sample", "--in", pairs, "--out", tmp.path("sampled.jsonl"),
             "--per-direction", "10", "--seed", "3"}) == 0);
  const CorpusSet sampled = load_corpus(tmp.path("sampled.jsonl"), CorpusFormat::jsonl);
  CHECK(sampled.size() == 30);

  CHECK(run({"corpus", "filter", "--in", pairs, "--out", tmp.path("filtered.jsonl"), "--min",
             "1", "--max", "100"}) == 0);
  CHECK(run({"corpus", "stats", "--in", pairs, "--out", tmp.path("stats.json")}) == 0);
  CHECK(slurp(tmp.path("stats.json")).find("buckets") != std::string::npos);

  CHECK(run({"corpus", "similarity", "--test", pairs, "--train", pairs, "--langs", "en,de",
             "--out", tmp.path("sim.json")}) == 0);
  const json sim = json::parse(slurp(tmp.path("sim.json")));
  CHECK(sim.at("scores").at("en") == 1.0);
}

TEST_CASE("templates list prints all six strategies") {
  CHECK(run({"templates", "list"}) == 0);
  CHECK(run({"templates", "list", "--json"}) == 0);
}

TEST_CASE("synth pipeline: generate, refine, accept, export over the scripted gateway") {
  TempDir tmp("cli");
  const std::string pairs = write_demo_corpus(tmp, 4);

  CHECK(run({"synth", "generate", "--pairs", pairs, "--chains", tmp.path("chains.jsonl"),
             "--gateway-mode", "scripted"}) == 0);
  CHECK(run({"synth", "refine", "--chains", tmp.path("chains.jsonl"), "--out",
             tmp.path("refined.jsonl"), "--gateway-mode", "scripted"}) == 0);
  CHECK(run({"synth", "accept", "--chains", tmp.path("refined.jsonl"), "--records",
             tmp.path("records.jsonl"), "--rejections", tmp.path("rej.jsonl")}) == 0);
  CHECK(run({"sft", "export", "--records", tmp.path("records.jsonl"), "--out",
             tmp.path("sft.jsonl"), "--rl-out", tmp.path("rl.jsonl")}) == 0);

  std::size_t n = 0;
  for_each_jsonl(tmp.path("sft.jsonl"), [&](std::size_t, const json& j) {
    ++n;
    CHECK(format_reward(j.at("response").get<std::string>()) == 1);
  });
  CHECK(n > 0);

  // generate into the same chains file again: resume skips everything
  CHECK(run({"synth", "generate", "--pairs", pairs, "--chains", tmp.path("chains.jsonl"),
             "--gateway-mode", "scripted"}) == 0);
}

TEST_CASE("reward score prints the breakdown json") {
  TempDir tmp("cli");
  write_text(tmp.path("out.txt"), "<think>plan</think><answer>a b c</answer>");
  CHECK(run({"reward", "score", "--text", tmp.path("out.txt"), "--ref", "a b d", "--audit",
             tmp.path("audit.jsonl"), "--sample-id", "s1"}) == 0);
  std::size_t rows = 0;
  for_each_jsonl(tmp.path("audit.jsonl"), [&](std::size_t, const json& j) {
    ++rows;
    CHECK(j.at("s_format") == 1);
    CHECK(j.at("discretized") == 0.333);
  });
  CHECK(rows == 1);
  CHECK(run({"reward", "score", "--text", tmp.path("out.txt")}) == 2);  // no --ref
}

TEST_CASE("train rl --epochs 0 exits 0 with an empty report") {
  TempDir tmp("cli");
  CHECK(run({"train", "rl", "--epochs", "0", "--report-csv", tmp.path("r.csv"),
             "--checkpoint", tmp.path("p.json")}) == 0);
  const std::string csv = slurp(tmp.path("r.csv"));
  CHECK(csv == "epoch,mean_total_reward,mean_s_format,mean_quality,grad_norm\n");
  CHECK(json::parse(slurp(tmp.path("p.json"))).at("vocab_size") == 16);
}

TEST_CASE("train rl smoke run is deterministic under a fixed seed") {
  TempDir tmp("cli");
  auto train_once = [&](const std::string& tag) {
    REQUIRE(run({"train", "rl", "--epochs", "1", "--batches-per-epoch", "5",
                 "--batch-prompts", "2", "--n-rollouts", "4", "--vocab-size", "4",
                 "--len-min", "2", "--len-max", "2", "--seed", "11", "--report-csv",
                 tmp.path(tag + ".csv")}) == 0);
  };
  train_once("a");
  train_once("b");
  CHECK(slurp(tmp.path("a.csv")) == slurp(tmp.path("b.csv")));
}

TEST_CASE("eval aggregate + report emit render the pivot layout") {
  TempDir tmp("cli");
  write_text(tmp.path("scores.jsonl"),
             std::string(R"({"model":"m1","src_lang":"fr","tgt_lang":"en","score":0.7})") + "\n" +
                 R"({"model":"m1","src_lang":"fr","tgt_lang":"en","score":0.9})" + "\n" +
                 R"({"model":"m1","src_lang":"en","tgt_lang":"zh","score":0.5})" + "\n");
  CHECK(run({"eval", "aggregate", "--scores", tmp.path("scores.jsonl"), "--out",
             tmp.path("table.json")}) == 0);
  CHECK(run({"report", "emit", "--table", tmp.path("table.json"), "--format", "markdown",
             "--out", tmp.path("report.md")}) == 0);
  const std::string md = slurp(tmp.path("report.md"));
  CHECK(md.find("xx2en:fr") != std::string::npos);
  CHECK(md.find("0.800") != std::string::npos);
  CHECK(run({"report", "emit", "--table", tmp.path("table.json"), "--format", "csv", "--out",
             tmp.path("report.csv")}) == 0);
  CHECK(slurp(tmp.path("report.csv")).find("m1,fr,en,0.800,2") != std::string::npos);
}

TEST_CASE("config file layers under flags") {
  TempDir tmp("cli");
  write_text(tmp.path("cfg.ini"), "[reward]\nformat_weight = 2.0\n");
  write_text(tmp.path("out.txt"), "<think>t</think><answer>a</answer>");
  CHECK(run({"--config", tmp.path("cfg.ini"), "reward", "score", "--text", tmp.path("out.txt"),
             "--ref", "a", "--audit", tmp.path("audit.jsonl")}) == 0);
  bool saw = false;
  for_each_jsonl(tmp.path("audit.jsonl"), [&](std::size_t, const json& j) {
    saw = true;
    CHECK(j.at("total") == 3.0);  // 2.0 + R(1.0)
  });
  CHECK(saw);
}
