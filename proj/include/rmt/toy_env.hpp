#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rmt/jsonl.hpp"
#include "rmt/metric.hpp"
#include "rmt/reward.hpp"

namespace rmt {

// Token-level translation surrogate: a bijective lexicon over [0, V) maps
// source tokens to target tokens, prompts are random source sequences, and
// the reward path runs through the real format/quality machinery on
// rendered token text.
struct SyntheticEnv {
  int vocab_size = 0;
  std::vector<int> lexicon;  // bijection source -> target
  int len_min = 1;
  int len_max = 1;
  bool format_required = true;

  void validate() const;

  std::vector<int> reference_tokens(const std::vector<int>& source) const;
  std::string render_source(const std::vector<int>& source) const;
  std::string render_target(const std::vector<int>& target) const;
  std::vector<int> sample_prompt(std::mt19937_64& rng) const;

  // Identity-block permutation on [0, block) composed with a seeded
  // permutation above it, so a small probe env can share the lexicon.
  static SyntheticEnv make_lexicon_env(int vocab_size, int len_min, int len_max,
                                       std::uint64_t seed, int closed_block = 0);

  // Sub-environment over the first `probe_vocab` tokens; requires the
  // lexicon to keep that block closed.
  SyntheticEnv probe(int probe_vocab, int len) const;
};

// Factorized emission policy: one logit row per source token plus a single
// format logit; exact enumeration and closed-form gradients stay in reach
// while every reward/advantage/update path is exercised.
struct ToyPolicy {
  int vocab_size = 0;
  std::vector<double> theta;  // V*V, row-major by source token
  double theta_f = 0.0;

  static ToyPolicy uniform(int vocab_size, double theta_f = 0.0);

  double logit(int src, int tgt) const { return theta[static_cast<std::size_t>(src) * vocab_size + tgt]; }
  double& logit(int src, int tgt) { return theta[static_cast<std::size_t>(src) * vocab_size + tgt]; }
  std::vector<double> row_probs(int src) const;
  double format_prob() const;

  // Restriction to the top-left block; emission rows renormalize over the
  // first `sub_vocab` targets.
  ToyPolicy restrict(int sub_vocab) const;

  json to_json(const std::string& config_hash = "") const;
  static ToyPolicy from_json(const json& j);
  void save(const std::string& path, const std::string& config_hash = "") const;
  static ToyPolicy load(const std::string& path);
};

struct RolloutSample {
  std::vector<int> tokens;
  bool formatted = false;
  std::string text;  // reward-visible output
  double logprob = 0.0;
  RewardBreakdown reward;
  bool scored = false;
  double advantage = 0.0;
};

struct PromptRollouts {
  std::vector<int> source;
  std::string source_text;
  std::string reference_text;
  std::vector<RolloutSample> samples;
};

struct RolloutBatch {
  std::vector<PromptRollouts> prompts;
  int n_rollouts = 0;
  bool format_in_play = true;  // false when the env skips the format bit
};

// Fixed think filler for formatted toy outputs.
inline constexpr const char* kToyThink = "map tokens through the lexicon";

std::string render_toy_output(const SyntheticEnv& env, const std::vector<int>& tokens,
                              bool formatted);

// Per-rollout RNG streams derive from (seed, prompt index, rollout index),
// so results cannot depend on scheduling order.
RolloutBatch sample_rollouts(const ToyPolicy& policy, const SyntheticEnv& env,
                             const std::vector<std::vector<int>>& prompts, int n_rollouts,
                             std::uint64_t seed);

void score_rollouts(RolloutBatch& batch, const SyntheticEnv& env, const QualityMetric& metric,
                    double format_weight = 1.0);

}  // namespace rmt
