#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "rmt/rng.hpp"
#include "rmt/trainer.hpp"
#include "test_util.hpp"

using namespace rmt;
using namespace rmt::testutil;

namespace {

SyntheticEnv small_env(int vocab, int len, std::uint64_t seed = 11) {
  return SyntheticEnv::make_lexicon_env(vocab, len, len, seed);
}

ToyPolicy random_policy(int vocab, std::uint64_t seed, double logit_range = 2.0) {
  ToyPolicy p = ToyPolicy::uniform(vocab);
  std::mt19937_64 rng(seed);
  for (auto& v : p.theta) v = (uniform01(rng) * 2.0 - 1.0) * logit_range;
  p.theta_f = (uniform01(rng) * 2.0 - 1.0) * logit_range;
  return p;
}

}  // namespace

TEST_CASE("env validation catches non-bijective lexicons") {
  SyntheticEnv env = small_env(4, 2);
  env.validate();
  env.lexicon[0] = env.lexicon[1];
  CHECK_THROWS_AS(env.validate(), std::invalid_argument);
}

TEST_CASE("reference tokens follow the lexicon; rendered text is stable") {
  SyntheticEnv env = small_env(4, 3);
  const std::vector<int> src = {0, 2, 1};
  const auto ref = env.reference_tokens(src);
  for (std::size_t i = 0; i < src.size(); ++i) {
    CHECK(ref[i] == env.lexicon[static_cast<std::size_t>(src[i])]);
  }
  CHECK(env.render_source({0, 1}) == "s0 s1");
  CHECK(env.render_target({2, 3}) == "t2 t3");
}

TEST_CASE("sample_rollouts: same seed gives an identical batch") {
  const SyntheticEnv env = small_env(5, 3);
  const ToyPolicy policy = random_policy(5, 99);
  const std::vector<std::vector<int>> prompts = {{0, 1, 2}, {4, 3, 0}};
  const RolloutBatch a = sample_rollouts(policy, env, prompts, 8, 1234);
  const RolloutBatch b = sample_rollouts(policy, env, prompts, 8, 1234);
  REQUIRE(a.prompts.size() == b.prompts.size());
  for (std::size_t p = 0; p < a.prompts.size(); ++p) {
    for (std::size_t r = 0; r < a.prompts[p].samples.size(); ++r) {
      CHECK(a.prompts[p].samples[r].tokens == b.prompts[p].samples[r].tokens);
      CHECK(a.prompts[p].samples[r].formatted == b.prompts[p].samples[r].formatted);
      CHECK(a.prompts[p].samples[r].logprob == b.prompts[p].samples[r].logprob);
    }
  }
  const RolloutBatch c = sample_rollouts(policy, env, prompts, 8, 1235);
  bool differs = false;
  for (std::size_t p = 0; p < a.prompts.size(); ++p) {
    for (std::size_t r = 0; r < a.prompts[p].samples.size(); ++r) {
      if (a.prompts[p].samples[r].tokens != c.prompts[p].samples[r].tokens) differs = true;
    }
  }
  CHECK(differs);
}

TEST_CASE("sample_rollouts: a dominant logit wins nearly always") {
  const SyntheticEnv env = small_env(4, 1);
  ToyPolicy policy = ToyPolicy::uniform(4, 20.0);
  policy.logit(0, 2) = 20.0;  // softmax tail mass ~ 3 * e^-20
  const std::vector<std::vector<int>> prompts(10, std::vector<int>{0});
  const RolloutBatch batch = sample_rollouts(policy, env, prompts, 1000, 7);
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& pr : batch.prompts) {
    for (const auto& s : pr.samples) {
      hits += (s.tokens[0] == 2);
      CHECK(s.formatted);  // sigmoid(20) saturates
      ++total;
    }
  }
  CHECK(total == 10000);
  CHECK(static_cast<double>(hits) / static_cast<double>(total) > 0.999);
}

TEST_CASE("analytic logprob matches the sampled path probabilities") {
  const SyntheticEnv env = small_env(3, 2);
  const ToyPolicy policy = random_policy(3, 5);
  const RolloutBatch batch = sample_rollouts(policy, env, {{0, 1}}, 4, 9);
  for (const auto& s : batch.prompts[0].samples) {
    double expected = 0.0;
    expected += std::log(policy.row_probs(0)[static_cast<std::size_t>(s.tokens[0])]);
    expected += std::log(policy.row_probs(1)[static_cast<std::size_t>(s.tokens[1])]);
    const double pf = policy.format_prob();
    expected += std::log(s.formatted ? pf : 1.0 - pf);
    CHECK(s.logprob == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("compute_advantages: group arithmetic and degenerate cases") {
  const SyntheticEnv env = small_env(3, 1);
  RolloutBatch batch = sample_rollouts(ToyPolicy::uniform(3), env, {{0}, {1}}, 2, 3);
  const LexicalMetric metric("en");
  score_rollouts(batch, env, metric);

  SUBCASE("hand case: group rewards [2,0] -> advantages [1,-1] before normalization") {
    batch.prompts[0].samples[0].reward.total = 2.0;
    batch.prompts[0].samples[1].reward.total = 0.0;
    batch.prompts[1].samples[0].reward.total = 1.0;
    batch.prompts[1].samples[1].reward.total = 1.0;
    compute_advantages(batch, BaselineMode::group_mean, /*normalize=*/false);
    CHECK(batch.prompts[0].samples[0].advantage == 1.0);
    CHECK(batch.prompts[0].samples[1].advantage == -1.0);
    CHECK(batch.prompts[1].samples[0].advantage == 0.0);
  }
  SUBCASE("equal rewards give zero advantages even with normalization") {
    for (auto& pr : batch.prompts) {
      for (auto& s : pr.samples) s.reward.total = 1.5;
    }
    compute_advantages(batch, BaselineMode::group_mean, /*normalize=*/true);
    for (const auto& pr : batch.prompts) {
      for (const auto& s : pr.samples) CHECK(s.advantage == 0.0);
    }
  }
  SUBCASE("group advantages sum to zero per group") {
    batch.prompts[0].samples[0].reward.total = 1.7;
    batch.prompts[0].samples[1].reward.total = 0.2;
    batch.prompts[1].samples[0].reward.total = 2.0;
    batch.prompts[1].samples[1].reward.total = 0.9;
    compute_advantages(batch, BaselineMode::group_mean, /*normalize=*/false);
    for (const auto& pr : batch.prompts) {
      double sum = 0.0;
      for (const auto& s : pr.samples) sum += s.advantage;
      CHECK(std::abs(sum) < 1e-9 * static_cast<double>(pr.samples.size()));
    }
  }
  SUBCASE("batch_mean subtracts the global mean") {
    batch.prompts[0].samples[0].reward.total = 4.0;
    batch.prompts[0].samples[1].reward.total = 0.0;
    batch.prompts[1].samples[0].reward.total = 0.0;
    batch.prompts[1].samples[1].reward.total = 0.0;
    compute_advantages(batch, BaselineMode::batch_mean, /*normalize=*/false);
    CHECK(batch.prompts[0].samples[0].advantage == 3.0);
    CHECK(batch.prompts[1].samples[0].advantage == -1.0);
  }
}

TEST_CASE("update: zero advantages are the bitwise identity") {
  const SyntheticEnv env = small_env(4, 2);
  const ToyPolicy policy = random_policy(4, 21);
  RolloutBatch batch = sample_rollouts(policy, env, {{0, 1}, {2, 3}}, 4, 5);
  const LexicalMetric metric("en");
  score_rollouts(batch, env, metric);
  for (auto& pr : batch.prompts) {
    for (auto& s : pr.samples) s.advantage = 0.0;
  }
  const UpdateResult result = update(policy, batch, 0.5);
  CHECK(result.policy.theta == policy.theta);
  CHECK(result.policy.theta_f == policy.theta_f);
  CHECK(result.grad_norm == 0.0);
}

TEST_CASE("update: closed-form softmax gradient for one sample at V=3") {
  SyntheticEnv env = small_env(3, 1);
  ToyPolicy policy = ToyPolicy::uniform(3, 0.0);
  policy.logit(0, 0) = 0.3;
  policy.logit(0, 1) = -0.2;
  policy.logit(0, 2) = 0.1;

  RolloutBatch batch;
  batch.n_rollouts = 1;
  PromptRollouts pr;
  pr.source = {0};
  pr.source_text = env.render_source(pr.source);
  pr.reference_text = env.render_target(env.reference_tokens(pr.source));
  RolloutSample s;
  s.tokens = {1};
  s.formatted = true;
  s.scored = true;
  s.advantage = 1.0;
  pr.samples.push_back(s);
  batch.prompts.push_back(pr);

  const double alpha = 0.25;
  const UpdateResult result = update(policy, batch, alpha);

  // Independent softmax arithmetic.
  const double e0 = std::exp(0.3);
  const double e1 = std::exp(-0.2);
  const double e2 = std::exp(0.1);
  const double z = e0 + e1 + e2;
  const double p0 = e0 / z;
  const double p1 = e1 / z;
  const double p2 = e2 / z;

  CHECK(result.policy.logit(0, 0) ==
        doctest::Approx(0.3 + alpha * (0.0 - p0)).epsilon(1e-12));
  CHECK(result.policy.logit(0, 1) ==
        doctest::Approx(-0.2 + alpha * (1.0 - p1)).epsilon(1e-12));
  CHECK(result.policy.logit(0, 2) ==
        doctest::Approx(0.1 + alpha * (0.0 - p2)).epsilon(1e-12));
  // Untouched rows stay put.
  CHECK(result.policy.logit(1, 0) == 0.0);
  // Format logit: advantage * (1 - sigmoid(0)) = 0.5.
  CHECK(result.policy.theta_f == doctest::Approx(alpha * 0.5).epsilon(1e-12));
}

TEST_CASE("update: KL term vanishes when the reference equals the policy") {
  const SyntheticEnv env = small_env(3, 2);
  const ToyPolicy policy = random_policy(3, 77);
  RolloutBatch batch = sample_rollouts(policy, env, {{0, 1}}, 4, 5);
  const LexicalMetric metric("en");
  score_rollouts(batch, env, metric);
  compute_advantages(batch);

  UpdateOptions with_kl;
  with_kl.kl_beta = 0.7;
  with_kl.reference = &policy;
  const UpdateResult a = update(policy, batch, 0.1, with_kl);
  const UpdateResult b = update(policy, batch, 0.1);
  for (std::size_t i = 0; i < a.policy.theta.size(); ++i) {
    CHECK(a.policy.theta[i] == doctest::Approx(b.policy.theta[i]).epsilon(1e-12));
  }
  CHECK(a.policy.theta_f == doctest::Approx(b.policy.theta_f).epsilon(1e-12));
}

TEST_CASE("update: KL pulls toward the reference when it differs") {
  const ToyPolicy policy = random_policy(3, 31);
  ToyPolicy reference = ToyPolicy::uniform(3, 0.0);
  RolloutBatch empty_batch;
  empty_batch.n_rollouts = 1;
  PromptRollouts pr;
  pr.source = {0};
  RolloutSample s;
  s.tokens = {0};
  s.formatted = true;
  s.scored = true;
  s.advantage = 0.0;
  pr.samples.push_back(s);
  empty_batch.prompts.push_back(pr);

  UpdateOptions opts;
  opts.kl_beta = 0.5;
  opts.reference = &reference;
  const UpdateResult result = update(policy, empty_batch, 0.1, opts);
  // With zero advantages the only movement is the KL pull; KL to uniform
  // must shrink.
  auto kl_to_uniform = [](const ToyPolicy& p) {
    double kl = 0.0;
    for (int s2 = 0; s2 < p.vocab_size; ++s2) {
      const auto probs = p.row_probs(s2);
      for (double v : probs) kl += v * std::log(v * p.vocab_size);
    }
    return kl;
  };
  CHECK(kl_to_uniform(result.policy) < kl_to_uniform(policy));
}

TEST_CASE("update: non-finite advantages are rejected with the sample id") {
  const SyntheticEnv env = small_env(3, 1);
  const ToyPolicy policy = ToyPolicy::uniform(3);
  RolloutBatch batch = sample_rollouts(policy, env, {{0}}, 2, 5);
  const LexicalMetric metric("en");
  score_rollouts(batch, env, metric);
  batch.prompts[0].samples[1].advantage = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(update(policy, batch, 0.1),
                       doctest::Contains("prompt 0 rollout 1"), std::runtime_error);
}

TEST_CASE("exact_expected_reward: lexicon-matching deterministic policy scores ~2") {
  const SyntheticEnv env = small_env(3, 2);
  ToyPolicy policy = ToyPolicy::uniform(3, 40.0);
  for (int s = 0; s < 3; ++s) policy.logit(s, env.lexicon[static_cast<std::size_t>(s)]) = 40.0;
  const LexicalMetric metric("en");
  const double expected = exact_expected_reward(policy, env, {0, 1}, metric);
  CHECK(expected == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("exact_expected_reward: uniform policy, V=2, L=1, hand-enumerated sum") {
  SyntheticEnv env;
  env.vocab_size = 2;
  env.lexicon = {0, 1};
  env.len_min = 1;
  env.len_max = 1;
  const ToyPolicy policy = ToyPolicy::uniform(2, 0.0);
  const LexicalMetric metric("en");
  // Four outcomes: unformatted (reward 0) x2 at p=0.25 each; formatted
  // correct token (1 + 1.0 = 2) at 0.25; formatted wrong token (1 + 0) at
  // 0.25. Total: 0.75.
  const std::vector<int> prompt = {0};
  CHECK(exact_expected_reward(policy, env, prompt, metric) ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("exact_expected_reward: format gate shut means zero reward") {
  const SyntheticEnv env = small_env(3, 2);
  const ToyPolicy policy = ToyPolicy::uniform(3, -100.0);
  const LexicalMetric metric("en");
  CHECK(exact_expected_reward(policy, env, {0, 1}, metric) < 1e-12);
}

TEST_CASE("exact_expected_reward: enumeration guard") {
  const SyntheticEnv env = SyntheticEnv::make_lexicon_env(16, 6, 6, 1);
  const ToyPolicy policy = ToyPolicy::uniform(16);
  const LexicalMetric metric("en");
  const std::vector<int> long_prompt = {0, 1, 2, 3, 4, 5};  // 2*16^6 > 1e6
  CHECK_THROWS_AS(exact_expected_reward(policy, env, long_prompt, metric),
                  std::invalid_argument);
}

TEST_CASE("gradient_check: random policies at V=3, L=2 pass the 1e-4 bar") {
  const SyntheticEnv env = small_env(3, 2);
  const LexicalMetric metric("en");
  const std::vector<std::vector<int>> prompts = {{0, 1}, {2, 0}};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ToyPolicy policy = random_policy(3, seed);
    const GradientCheckReport report = gradient_check(policy, env, prompts, metric);
    CAPTURE(seed);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("gradient_check: softmax rows of the exact gradient sum to zero") {
  const SyntheticEnv env = small_env(3, 2);
  const LexicalMetric metric("en");
  const ToyPolicy policy = ToyPolicy::uniform(3, 0.0);
  const auto grad = exact_reward_gradient(policy, env, {{0, 1}}, metric);
  for (int s = 0; s < 3; ++s) {
    double row_sum = 0.0;
    for (int j = 0; j < 3; ++j) row_sum += grad[static_cast<std::size_t>(s) * 3 + j];
    CHECK(std::abs(row_sum) < 1e-12);
  }
}

TEST_CASE("gradient_check: halving h shrinks the fd error about quadratically") {
  const SyntheticEnv env = small_env(3, 2);
  const LexicalMetric metric("en");
  const ToyPolicy policy = random_policy(3, 17);
  const std::vector<std::vector<int>> prompts = {{0, 2}};
  const auto analytic = exact_reward_gradient(policy, env, prompts, metric);

  auto fd_error = [&](double h) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      auto perturbed = [&](double delta) {
        ToyPolicy p = policy;
        if (i + 1 == analytic.size()) {
          p.theta_f += delta;
        } else {
          p.theta[i] += delta;
        }
        return exact_expected_reward(p, env, prompts[0], metric);
      };
      const double fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - analytic[i]));
    }
    return worst;
  };

  const double e1 = fd_error(1e-2);
  const double e2 = fd_error(5e-3);
  CHECK(e2 < 0.5 * e1);          // clearly better than first order
  CHECK(e2 > 0.1 * e1 - 1e-12);  // and consistent with ~4x, not noise
}

TEST_CASE("train: epochs=0 leaves the policy at init and the report empty") {
  const SyntheticEnv env = small_env(4, 2);
  const LexicalMetric metric("en");
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainResult result = train(cfg, env, metric);
  CHECK(result.report.epochs.empty());
  CHECK(result.policy.theta == ToyPolicy::uniform(4).theta);
}

TEST_CASE("train: identical seeds give identical reports") {
  const SyntheticEnv env = small_env(4, 2);
  const LexicalMetric metric("en");
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batches_per_epoch = 10;
  cfg.batch_prompts = 4;
  cfg.n_rollouts = 4;
  cfg.seed = 99;
  const TrainResult a = train(cfg, env, metric);
  const TrainResult b = train(cfg, env, metric);
  REQUIRE(a.report.epochs.size() == b.report.epochs.size());
  for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
    CHECK(a.report.epochs[i].mean_total_reward == b.report.epochs[i].mean_total_reward);
    CHECK(a.report.epochs[i].grad_norm == b.report.epochs[i].grad_norm);
  }
  CHECK(a.policy.theta == b.policy.theta);
}

TEST_CASE("train: learning signal on a small lexicon task") {
  const SyntheticEnv env = SyntheticEnv::make_lexicon_env(6, 2, 3, 4);
  const LexicalMetric metric("en");
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batches_per_epoch = 60;
  cfg.batch_prompts = 8;
  cfg.n_rollouts = 8;
  cfg.lr = 0.1;
  cfg.theta_f_init = -1.0;
  cfg.seed = 7;
  const TrainResult result = train(cfg, env, metric);
  REQUIRE(result.report.epochs.size() == 2);
  CHECK(result.report.epochs[1].mean_total_reward >
        result.report.epochs[0].mean_total_reward);
  const EvalStats before =
      evaluate_policy(ToyPolicy::uniform(6, -1.0), env, metric, 16, 8, 123);
  const EvalStats after = evaluate_policy(result.policy, env, metric, 16, 8, 123);
  CHECK(after.mean_total_reward > before.mean_total_reward);
  CHECK(after.format_compliance > before.format_compliance);
}

TEST_CASE("train: divergence guard aborts with a marked report") {
  const SyntheticEnv env = small_env(4, 2);
  const LexicalMetric metric("en");
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batches_per_epoch = 30;
  cfg.batch_prompts = 4;
  cfg.n_rollouts = 4;
  cfg.lr = 500.0;
  cfg.divergence_bound = 1.0;
  const TrainResult result = train(cfg, env, metric);
  CHECK(result.report.diverged);
}

TEST_CASE("format compliance is non-decreasing in the format logit") {
  const SyntheticEnv env = small_env(4, 2);
  const LexicalMetric metric("en");
  double prev = -1.0;
  for (double tf : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const EvalStats stats =
        evaluate_policy(ToyPolicy::uniform(4, tf), env, metric, 20, 10, 55);
    CHECK(stats.format_compliance >= prev);
    prev = stats.format_compliance;
  }
}

TEST_CASE("policy checkpoints round trip through json") {
  TempDir tmp("rl");
  const ToyPolicy policy = random_policy(5, 13);
  policy.save(tmp.path("policy.json"), "cfg123");
  const ToyPolicy back = ToyPolicy::load(tmp.path("policy.json"));
  CHECK(back.vocab_size == 5);
  CHECK(back.theta == policy.theta);
  CHECK(back.theta_f == policy.theta_f);
  const json j = json::parse(slurp(tmp.path("policy.json")));
  CHECK(j.at("version") == "policy-v1");
  CHECK(j.at("config_hash") == "cfg123");
}

TEST_CASE("restrict keeps the block logits and the format logit") {
  ToyPolicy policy = random_policy(6, 3);
  const ToyPolicy sub = policy.restrict(3);
  CHECK(sub.vocab_size == 3);
  CHECK(sub.theta_f == policy.theta_f);
  for (int s = 0; s < 3; ++s) {
    for (int t = 0; t < 3; ++t) CHECK(sub.logit(s, t) == policy.logit(s, t));
  }
}

TEST_CASE("train report writers produce the documented layouts") {
  TempDir tmp("rl");
  TrainReport report;
  report.config_echo = json{{"lr", 0.05}};
  EpochStats e;
  e.epoch = 0;
  e.mean_total_reward = 1.25;
  e.mean_s_format = 0.5;
  e.mean_quality = 0.25;
  e.grad_norm = 0.125;
  report.epochs.push_back(e);

  report_to_csv(report, tmp.path("r.csv"));
  const std::string csv = slurp(tmp.path("r.csv"));
  CHECK(csv.find("epoch,mean_total_reward,mean_s_format,mean_quality,grad_norm") == 0);
  CHECK(csv.find("0,1.250000,0.500000,0.250000,0.125000") != std::string::npos);

  report_to_jsonl(report, tmp.path("r.jsonl"));
  std::size_t lines = 0;
  for_each_jsonl(tmp.path("r.jsonl"), [&](std::size_t n, const json& j) {
    ++lines;
    if (n == 1) {
      CHECK(j.contains("config"));
    } else {
      CHECK(j.at("epoch") == 0);
    }
  });
  CHECK(lines == 2);
}

TEST_CASE("probe env shares the closed lexicon block") {
  const SyntheticEnv env = SyntheticEnv::make_lexicon_env(16, 3, 6, 42, /*closed_block=*/4);
  for (int i = 0; i < 4; ++i) CHECK(env.lexicon[static_cast<std::size_t>(i)] < 4);
  const SyntheticEnv probe = env.probe(4, 3);
  CHECK(probe.vocab_size == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(probe.lexicon[static_cast<std::size_t>(i)] == env.lexicon[static_cast<std::size_t>(i)]);
  }
  const SyntheticEnv open_env = SyntheticEnv::make_lexicon_env(16, 3, 6, 7);
  bool closed = true;
  for (int i = 0; i < 4; ++i) closed = closed && open_env.lexicon[static_cast<std::size_t>(i)] < 4;
  if (!closed) CHECK_THROWS_AS(open_env.probe(4, 3), std::invalid_argument);
}
