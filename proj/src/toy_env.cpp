#include "rmt/toy_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rmt/rng.hpp"

namespace rmt {

void SyntheticEnv::validate() const {
  if (vocab_size <= 0) throw std::invalid_argument("env: vocab_size must be positive");
  if (len_min < 1 || len_max < len_min) {
    throw std::invalid_argument("env: bad length range");
  }
  if (static_cast<int>(lexicon.size()) != vocab_size) {
    throw std::invalid_argument("env: lexicon size != vocab size");
  }
  std::vector<bool> seen(static_cast<std::size_t>(vocab_size), false);
  for (int t : lexicon) {
    if (t < 0 || t >= vocab_size || seen[static_cast<std::size_t>(t)]) {
      throw std::invalid_argument("env: lexicon is not a bijection on [0, V)");
    }
    seen[static_cast<std::size_t>(t)] = true;
  }
}

std::vector<int> SyntheticEnv::reference_tokens(const std::vector<int>& source) const {
  std::vector<int> out;
  out.reserve(source.size());
  for (int s : source) out.push_back(lexicon[static_cast<std::size_t>(s)]);
  return out;
}

std::string SyntheticEnv::render_source(const std::vector<int>& source) const {
  std::string out;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (i > 0) out += ' ';
    out += "s" + std::to_string(source[i]);
  }
  return out;
}

std::string SyntheticEnv::render_target(const std::vector<int>& target) const {
  std::string out;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (i > 0) out += ' ';
    out += "t" + std::to_string(target[i]);
  }
  return out;
}

std::vector<int> SyntheticEnv::sample_prompt(std::mt19937_64& rng) const {
  const int len =
      len_min + static_cast<int>(bounded(rng, static_cast<std::uint64_t>(len_max - len_min + 1)));
  std::vector<int> out(static_cast<std::size_t>(len));
  for (auto& s : out) s = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(vocab_size)));
  return out;
}

SyntheticEnv SyntheticEnv::make_lexicon_env(int vocab_size, int len_min, int len_max,
                                            std::uint64_t seed, int closed_block) {
  SyntheticEnv env;
  env.vocab_size = vocab_size;
  env.len_min = len_min;
  env.len_max = len_max;
  env.lexicon.resize(static_cast<std::size_t>(vocab_size));

  std::mt19937_64 rng(derive_seed(seed, 0xc0de));
  if (closed_block > 0) {
    if (closed_block > vocab_size) throw std::invalid_argument("closed_block > vocab_size");
    std::vector<int> low(static_cast<std::size_t>(closed_block));
    std::iota(low.begin(), low.end(), 0);
    shuffle_stable(low, rng);
    std::vector<int> high(static_cast<std::size_t>(vocab_size - closed_block));
    std::iota(high.begin(), high.end(), closed_block);
    shuffle_stable(high, rng);
    for (int i = 0; i < closed_block; ++i) env.lexicon[static_cast<std::size_t>(i)] = low[static_cast<std::size_t>(i)];
    for (int i = closed_block; i < vocab_size; ++i) {
      env.lexicon[static_cast<std::size_t>(i)] = high[static_cast<std::size_t>(i - closed_block)];
    }
  } else {
    std::iota(env.lexicon.begin(), env.lexicon.end(), 0);
    shuffle_stable(env.lexicon, rng);
  }
  env.validate();
  return env;
}

SyntheticEnv SyntheticEnv::probe(int probe_vocab, int len) const {
  SyntheticEnv p;
  p.vocab_size = probe_vocab;
  p.len_min = len;
  p.len_max = len;
  p.format_required = format_required;
  p.lexicon.assign(lexicon.begin(), lexicon.begin() + probe_vocab);
  for (int t : p.lexicon) {
    if (t >= probe_vocab) {
      throw std::invalid_argument("probe: lexicon does not keep the block closed");
    }
  }
  p.validate();
  return p;
}

ToyPolicy ToyPolicy::uniform(int vocab_size, double theta_f) {
  ToyPolicy p;
  p.vocab_size = vocab_size;
  p.theta.assign(static_cast<std::size_t>(vocab_size) * static_cast<std::size_t>(vocab_size), 0.0);
  p.theta_f = theta_f;
  return p;
}

std::vector<double> ToyPolicy::row_probs(int src) const {
  std::vector<double> probs(static_cast<std::size_t>(vocab_size));
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < vocab_size; ++t) max_logit = std::max(max_logit, logit(src, t));
  double z = 0.0;
  for (int t = 0; t < vocab_size; ++t) {
    probs[static_cast<std::size_t>(t)] = std::exp(logit(src, t) - max_logit);
    z += probs[static_cast<std::size_t>(t)];
  }
  for (auto& p : probs) p /= z;
  return probs;
}

double ToyPolicy::format_prob() const { return 1.0 / (1.0 + std::exp(-theta_f)); }

ToyPolicy ToyPolicy::restrict(int sub_vocab) const {
  if (sub_vocab > vocab_size) throw std::invalid_argument("restrict: sub_vocab > vocab_size");
  ToyPolicy p = ToyPolicy::uniform(sub_vocab, theta_f);
  for (int s = 0; s < sub_vocab; ++s) {
    for (int t = 0; t < sub_vocab; ++t) p.logit(s, t) = logit(s, t);
  }
  return p;
}

json ToyPolicy::to_json(const std::string& config_hash) const {
  return json{{"version", "policy-v1"},
              {"vocab_size", vocab_size},
              {"theta", theta},
              {"theta_f", theta_f},
              {"config_hash", config_hash}};
}

ToyPolicy ToyPolicy::from_json(const json& j) {
  ToyPolicy p;
  p.vocab_size = j.at("vocab_size").get<int>();
  p.theta = j.at("theta").get<std::vector<double>>();
  p.theta_f = j.at("theta_f").get<double>();
  if (p.theta.size() !=
      static_cast<std::size_t>(p.vocab_size) * static_cast<std::size_t>(p.vocab_size)) {
    throw std::runtime_error("policy: theta size mismatch");
  }
  return p;
}

void ToyPolicy::save(const std::string& path, const std::string& config_hash) const {
  auto out = open_for_write(path);
  out << to_json(config_hash).dump() << '\n';
}

ToyPolicy ToyPolicy::load(const std::string& path) {
  return from_json(json::parse(read_file(path)));
}

std::string render_toy_output(const SyntheticEnv& env, const std::vector<int>& tokens,
                              bool formatted) {
  const std::string body = env.render_target(tokens);
  if (!formatted) return body;
  return std::string("<think>") + kToyThink + "</think>\n<answer>" + body + "</answer>";
}

RolloutBatch sample_rollouts(const ToyPolicy& policy, const SyntheticEnv& env,
                             const std::vector<std::vector<int>>& prompts, int n_rollouts,
                             std::uint64_t seed) {
  if (n_rollouts < 1) throw std::invalid_argument("sample_rollouts: n_rollouts must be >= 1");
  env.validate();

  RolloutBatch batch;
  batch.n_rollouts = n_rollouts;
  batch.format_in_play = env.format_required;
  batch.prompts.reserve(prompts.size());

  for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
    PromptRollouts pr;
    pr.source = prompts[pi];
    pr.source_text = env.render_source(pr.source);
    pr.reference_text = env.render_target(env.reference_tokens(pr.source));

    // Row distributions reused across this prompt's rollouts.
    std::vector<std::vector<double>> row_cache(static_cast<std::size_t>(env.vocab_size));
    auto probs_for = [&](int src) -> const std::vector<double>& {
      auto& slot = row_cache[static_cast<std::size_t>(src)];
      if (slot.empty()) slot = policy.row_probs(src);
      return slot;
    };

    for (int r = 0; r < n_rollouts; ++r) {
      std::mt19937_64 rng(derive_seed(seed, pi, static_cast<std::uint64_t>(r)));
      RolloutSample sample;
      sample.tokens.reserve(pr.source.size());
      double logprob = 0.0;
      for (int src : pr.source) {
        const auto& probs = probs_for(src);
        const double u = uniform01(rng);
        double acc = 0.0;
        int chosen = env.vocab_size - 1;
        for (int t = 0; t < env.vocab_size; ++t) {
          acc += probs[static_cast<std::size_t>(t)];
          if (u < acc) {
            chosen = t;
            break;
          }
        }
        sample.tokens.push_back(chosen);
        logprob += std::log(probs[static_cast<std::size_t>(chosen)]);
      }
      if (env.format_required) {
        const double pf = policy.format_prob();
        sample.formatted = uniform01(rng) < pf;
        logprob += std::log(sample.formatted ? pf : 1.0 - pf);
      } else {
        sample.formatted = true;
      }
      sample.logprob = logprob;
      sample.text = render_toy_output(env, sample.tokens, sample.formatted);
      pr.samples.push_back(std::move(sample));
    }
    batch.prompts.push_back(std::move(pr));
  }
  return batch;
}

void score_rollouts(RolloutBatch& batch, const SyntheticEnv& env, const QualityMetric& metric,
                    double format_weight) {
  for (auto& pr : batch.prompts) {
    for (auto& s : pr.samples) {
      if (env.format_required) {
        s.reward = total_reward(s.text, pr.reference_text, pr.source_text, metric, format_weight);
      } else {
        RewardBreakdown b;
        b.metric_id = metric.metric_id();
        b.s_format = 1;
        b.has_quality = true;
        b.raw_quality = metric.score(s.text, pr.reference_text, pr.source_text);
        b.discretized = discretize(b.raw_quality);
        b.total = b.discretized;
        s.reward = b;
      }
      s.scored = true;
    }
  }
}

}  // namespace rmt
