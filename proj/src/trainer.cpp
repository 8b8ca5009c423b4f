#include "rmt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rmt/rng.hpp"

namespace rmt {

std::optional<BaselineMode> baseline_mode_from_string(std::string_view s) {
  if (s == "group_mean" || s == "group") return BaselineMode::group_mean;
  if (s == "batch_mean" || s == "batch") return BaselineMode::batch_mean;
  return std::nullopt;
}

std::string to_string(BaselineMode m) {
  return m == BaselineMode::group_mean ? "group_mean" : "batch_mean";
}

void compute_advantages(RolloutBatch& batch, BaselineMode mode, bool normalize, double eps) {
  double batch_sum = 0.0;
  std::size_t n = 0;
  for (const auto& pr : batch.prompts) {
    for (const auto& s : pr.samples) {
      if (!s.scored) throw std::logic_error("compute_advantages: rewards not populated");
      batch_sum += s.reward.total;
      ++n;
    }
  }
  if (n == 0) return;
  const double batch_mean = batch_sum / static_cast<double>(n);

  for (auto& pr : batch.prompts) {
    double baseline = batch_mean;
    if (mode == BaselineMode::group_mean) {
      double group_sum = 0.0;
      for (const auto& s : pr.samples) group_sum += s.reward.total;
      baseline = group_sum / static_cast<double>(pr.samples.size());
    }
    for (auto& s : pr.samples) s.advantage = s.reward.total - baseline;
  }

  if (!normalize) return;
  double mean = 0.0;
  for (const auto& pr : batch.prompts) {
    for (const auto& s : pr.samples) mean += s.advantage;
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& pr : batch.prompts) {
    for (const auto& s : pr.samples) {
      const double d = s.advantage - mean;
      var += d * d;
    }
  }
  const double stddev = std::sqrt(var / static_cast<double>(n));
  const double denom = std::max(stddev, eps);
  for (auto& pr : batch.prompts) {
    for (auto& s : pr.samples) s.advantage /= denom;
  }
}

UpdateResult update(const ToyPolicy& policy, const RolloutBatch& batch, double alpha,
                    const UpdateOptions& opts) {
  const int V = policy.vocab_size;
  std::vector<double> grad(static_cast<std::size_t>(V) * static_cast<std::size_t>(V), 0.0);
  double grad_f = 0.0;

  std::size_t n = 0;
  for (const auto& pr : batch.prompts) n += pr.samples.size();
  if (n == 0) {
    return {policy, 0.0};
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double sigma = policy.format_prob();

  for (std::size_t pi = 0; pi < batch.prompts.size(); ++pi) {
    const auto& pr = batch.prompts[pi];
    std::vector<std::vector<double>> row_cache(static_cast<std::size_t>(V));
    auto probs_for = [&](int src) -> const std::vector<double>& {
      auto& slot = row_cache[static_cast<std::size_t>(src)];
      if (slot.empty()) slot = policy.row_probs(src);
      return slot;
    };
    for (std::size_t ri = 0; ri < pr.samples.size(); ++ri) {
      const auto& s = pr.samples[ri];
      const double coef = s.advantage * inv_n;
      if (!std::isfinite(coef)) {
        throw std::runtime_error("update: non-finite gradient contribution from sample prompt " +
                                 std::to_string(pi) + " rollout " + std::to_string(ri));
      }
      for (std::size_t t = 0; t < s.tokens.size(); ++t) {
        const int src = pr.source[t];
        const int emitted = s.tokens[t];
        const auto& probs = probs_for(src);
        double* row = grad.data() + static_cast<std::size_t>(src) * static_cast<std::size_t>(V);
        for (int j = 0; j < V; ++j) row[j] -= coef * probs[static_cast<std::size_t>(j)];
        row[emitted] += coef;
      }
      if (batch.format_in_play) grad_f += coef * ((s.formatted ? 1.0 : 0.0) - sigma);
    }
  }

  ToyPolicy out = policy;
  double sq = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    out.theta[i] += alpha * grad[i];
    sq += grad[i] * grad[i];
  }
  out.theta_f += alpha * grad_f;
  sq += grad_f * grad_f;

  if (opts.kl_beta > 0.0) {
    if (opts.reference == nullptr) {
      throw std::invalid_argument("update: kl_beta > 0 needs a reference policy");
    }
    if (opts.reference->vocab_size != V) {
      throw std::invalid_argument("update: reference policy vocab mismatch");
    }
    for (int src = 0; src < V; ++src) {
      const auto p = policy.row_probs(src);
      const auto q = opts.reference->row_probs(src);
      double kl = 0.0;
      for (int j = 0; j < V; ++j) {
        kl += p[static_cast<std::size_t>(j)] *
              std::log(p[static_cast<std::size_t>(j)] / q[static_cast<std::size_t>(j)]);
      }
      for (int j = 0; j < V; ++j) {
        const double g = p[static_cast<std::size_t>(j)] *
                         (std::log(p[static_cast<std::size_t>(j)] / q[static_cast<std::size_t>(j)]) - kl);
        out.logit(src, j) -= opts.kl_beta * g;
      }
    }
    const double sr = opts.reference->format_prob();
    const double g_f = sigma * (1.0 - sigma) *
                       (std::log(sigma / sr) - std::log((1.0 - sigma) / (1.0 - sr)));
    out.theta_f -= opts.kl_beta * g_f;
  }

  for (double v : out.theta) {
    if (!std::isfinite(v)) throw std::runtime_error("update: non-finite parameter after update");
  }
  if (!std::isfinite(out.theta_f)) {
    throw std::runtime_error("update: non-finite format logit after update");
  }
  return {std::move(out), std::sqrt(sq)};
}

namespace {

double enumeration_size(const SyntheticEnv& env, std::size_t len) {
  return 2.0 * std::pow(static_cast<double>(env.vocab_size), static_cast<double>(len));
}

// Walks every token sequence of the given length; fn(tokens, prob).
template <typename Fn>
void enumerate_outputs(const ToyPolicy& policy, const SyntheticEnv& env,
                       const std::vector<int>& source, Fn&& fn) {
  const std::size_t L = source.size();
  std::vector<std::vector<double>> pos_probs(L);
  for (std::size_t i = 0; i < L; ++i) pos_probs[i] = policy.row_probs(source[i]);

  std::vector<int> tokens(L, 0);
  for (;;) {
    double p = 1.0;
    for (std::size_t i = 0; i < L; ++i) p *= pos_probs[i][static_cast<std::size_t>(tokens[i])];
    fn(tokens, p);
    std::size_t i = 0;
    while (i < L) {
      if (++tokens[i] < env.vocab_size) break;
      tokens[i] = 0;
      ++i;
    }
    if (i == L) return;
  }
}

double reward_for_output(const SyntheticEnv& env, const std::vector<int>& tokens, bool formatted,
                         const std::string& reference_text, const std::string& source_text,
                         const QualityMetric& metric, double format_weight) {
  const std::string text = render_toy_output(env, tokens, formatted);
  if (env.format_required) {
    return total_reward(text, reference_text, source_text, metric, format_weight).total;
  }
  return discretize(metric.score(text, reference_text, source_text));
}

}  // namespace

double exact_expected_reward(const ToyPolicy& policy, const SyntheticEnv& env,
                             const std::vector<int>& source, const QualityMetric& metric,
                             double format_weight) {
  env.validate();
  if (enumeration_size(env, source.size()) > 1e6) {
    throw std::invalid_argument("exact_expected_reward: enumeration too large");
  }
  const std::string source_text = env.render_source(source);
  const std::string reference_text = env.render_target(env.reference_tokens(source));
  const double pf = env.format_required ? policy.format_prob() : 1.0;

  double expected = 0.0;
  enumerate_outputs(policy, env, source, [&](const std::vector<int>& tokens, double p) {
    if (env.format_required) {
      const double r1 = reward_for_output(env, tokens, true, reference_text, source_text, metric,
                                          format_weight);
      const double r0 = reward_for_output(env, tokens, false, reference_text, source_text, metric,
                                          format_weight);
      expected += p * (pf * r1 + (1.0 - pf) * r0);
    } else {
      expected += p * reward_for_output(env, tokens, true, reference_text, source_text, metric,
                                        format_weight);
    }
  });
  return expected;
}

double exact_expected_reward(const ToyPolicy& policy, const SyntheticEnv& env,
                             const std::vector<std::vector<int>>& sources,
                             const QualityMetric& metric, double format_weight) {
  if (sources.empty()) throw std::invalid_argument("exact_expected_reward: no sources");
  double sum = 0.0;
  for (const auto& s : sources) sum += exact_expected_reward(policy, env, s, metric, format_weight);
  return sum / static_cast<double>(sources.size());
}

std::vector<double> exact_reward_gradient(const ToyPolicy& policy, const SyntheticEnv& env,
                                          const std::vector<std::vector<int>>& sources,
                                          const QualityMetric& metric, double format_weight) {
  env.validate();
  const int V = policy.vocab_size;
  const std::size_t n_params = static_cast<std::size_t>(V) * static_cast<std::size_t>(V) + 1;
  std::vector<double> grad(n_params, 0.0);
  const double sigma = policy.format_prob();

  for (const auto& source : sources) {
    if (enumeration_size(env, source.size()) > 1e6) {
      throw std::invalid_argument("exact_reward_gradient: enumeration too large");
    }
    const std::string source_text = env.render_source(source);
    const std::string reference_text = env.render_target(env.reference_tokens(source));

    std::vector<std::vector<double>> pos_probs(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) pos_probs[i] = policy.row_probs(source[i]);

    enumerate_outputs(policy, env, source, [&](const std::vector<int>& tokens, double p) {
      for (int b = 0; b <= (env.format_required ? 1 : 0); ++b) {
        const bool formatted = env.format_required ? (b == 1) : true;
        const double p_out =
            env.format_required ? p * (formatted ? sigma : 1.0 - sigma) : p;
        const double r = reward_for_output(env, tokens, formatted, reference_text, source_text,
                                           metric, format_weight);
        if (r == 0.0) continue;
        const double w = p_out * r / static_cast<double>(sources.size());
        for (std::size_t i = 0; i < source.size(); ++i) {
          const int src = source[i];
          const int emitted = tokens[i];
          double* row = grad.data() + static_cast<std::size_t>(src) * static_cast<std::size_t>(V);
          for (int j = 0; j < V; ++j) row[j] -= w * pos_probs[i][static_cast<std::size_t>(j)];
          row[emitted] += w;
        }
        if (env.format_required) {
          grad[n_params - 1] += w * ((formatted ? 1.0 : 0.0) - sigma);
        }
      }
    });
  }
  return grad;
}

GradientCheckReport gradient_check(const ToyPolicy& policy, const SyntheticEnv& env,
                                   const std::vector<std::vector<int>>& sources,
                                   const QualityMetric& metric, double h, double format_weight) {
  const std::vector<double> analytic =
      exact_reward_gradient(policy, env, sources, metric, format_weight);
  const int V = policy.vocab_size;
  const std::size_t n_params = static_cast<std::size_t>(V) * static_cast<std::size_t>(V) + 1;

  GradientCheckReport report;
  for (std::size_t i = 0; i < n_params; ++i) {
    auto perturbed = [&](double delta) {
      ToyPolicy p = policy;
      if (i + 1 == n_params) {
        p.theta_f += delta;
      } else {
        p.theta[i] += delta;
      }
      return exact_expected_reward(p, env, sources, metric, format_weight);
    };
    const double fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
    const double denom = std::max(std::abs(fd), 1e-6);
    const double rel = std::abs(analytic[i] - fd) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = i;
      report.analytic_at_worst = analytic[i];
      report.fd_at_worst = fd;
    }
  }
  return report;
}

json train_config_echo(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batches_per_epoch", c.batches_per_epoch},
              {"batch_prompts", c.batch_prompts},
              {"n_rollouts", c.n_rollouts},
              {"lr", c.lr},
              {"theta_f_init", c.theta_f_init},
              {"seed", c.seed},
              {"baseline", to_string(c.baseline)},
              {"normalize_advantages", c.normalize_advantages},
              {"kl_beta", c.kl_beta},
              {"format_weight", c.format_weight},
              {"divergence_bound", c.divergence_bound}};
}

std::string train_config_hash(const TrainConfig& c) {
  return hex64(fnv1a64(train_config_echo(c).dump()));
}

TrainResult train(const TrainConfig& config, const SyntheticEnv& env,
                  const QualityMetric& metric) {
  if (config.epochs < 0 || config.batch_prompts < 1 || config.n_rollouts < 1 ||
      config.batches_per_epoch < 1) {
    throw std::invalid_argument("train: bad config");
  }
  env.validate();

  TrainResult result;
  result.policy = ToyPolicy::uniform(env.vocab_size, config.theta_f_init);
  result.report.config_echo = train_config_echo(config);

  const ToyPolicy reference = result.policy;
  UpdateOptions opts;
  opts.kl_beta = config.kl_beta;
  opts.reference = config.kl_beta > 0.0 ? &reference : nullptr;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    double total_sum = 0.0;
    double format_sum = 0.0;
    double quality_sum = 0.0;
    std::size_t quality_n = 0;
    std::size_t sample_n = 0;
    double grad_norm_sum = 0.0;

    for (int b = 0; b < config.batches_per_epoch; ++b) {
      const std::uint64_t batch_id =
          static_cast<std::uint64_t>(epoch) * static_cast<std::uint64_t>(config.batches_per_epoch) +
          static_cast<std::uint64_t>(b);
      std::mt19937_64 prompt_rng(derive_seed(config.seed, batch_id, 0xa1));
      std::vector<std::vector<int>> prompts(static_cast<std::size_t>(config.batch_prompts));
      for (auto& p : prompts) p = env.sample_prompt(prompt_rng);

      RolloutBatch batch = sample_rollouts(result.policy, env, prompts, config.n_rollouts,
                                           derive_seed(config.seed, batch_id, 0xb2));
      score_rollouts(batch, env, metric, config.format_weight);
      compute_advantages(batch, config.baseline, config.normalize_advantages);
      UpdateResult ur = update(result.policy, batch, config.lr, opts);
      result.policy = std::move(ur.policy);
      grad_norm_sum += ur.grad_norm;

      for (const auto& pr : batch.prompts) {
        for (const auto& s : pr.samples) {
          total_sum += s.reward.total;
          format_sum += s.reward.s_format;
          if (s.reward.has_quality) {
            quality_sum += s.reward.raw_quality;
            ++quality_n;
          }
          ++sample_n;
        }
      }

      double mean_abs = 0.0;
      for (double v : result.policy.theta) mean_abs += std::abs(v);
      mean_abs /= static_cast<double>(result.policy.theta.size());
      if (mean_abs > config.divergence_bound) {
        result.report.diverged = true;
        stats.mean_total_reward = total_sum / static_cast<double>(sample_n);
        stats.mean_s_format = format_sum / static_cast<double>(sample_n);
        stats.mean_quality = quality_n ? quality_sum / static_cast<double>(quality_n) : 0.0;
        stats.grad_norm = grad_norm_sum / static_cast<double>(b + 1);
        result.report.epochs.push_back(stats);
        return result;
      }
    }

    stats.mean_total_reward = total_sum / static_cast<double>(sample_n);
    stats.mean_s_format = format_sum / static_cast<double>(sample_n);
    stats.mean_quality = quality_n ? quality_sum / static_cast<double>(quality_n) : 0.0;
    stats.grad_norm = grad_norm_sum / static_cast<double>(config.batches_per_epoch);
    result.report.epochs.push_back(stats);
  }
  return result;
}

void report_to_csv(const TrainReport& report, const std::string& path) {
  auto out = open_for_write(path);
  out << "epoch,mean_total_reward,mean_s_format,mean_quality,grad_norm\n";
  char buf[160];
  for (const auto& e : report.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", e.epoch, e.mean_total_reward,
                  e.mean_s_format, e.mean_quality, e.grad_norm);
    out << buf;
  }
}

void report_to_jsonl(const TrainReport& report, const std::string& path) {
  auto out = open_for_write(path);
  out << json{{"config", report.config_echo}, {"diverged", report.diverged}}.dump() << '\n';
  for (const auto& e : report.epochs) {
    out << json{{"epoch", e.epoch},
                {"mean_total_reward", e.mean_total_reward},
                {"mean_s_format", e.mean_s_format},
                {"mean_quality", e.mean_quality},
                {"grad_norm", e.grad_norm}}
               .dump()
        << '\n';
  }
}

EvalStats evaluate_policy(const ToyPolicy& policy, const SyntheticEnv& env,
                          const QualityMetric& metric, int n_prompts, int n_rollouts,
                          std::uint64_t seed, double format_weight) {
  std::mt19937_64 rng(derive_seed(seed, 0xe7a1));
  std::vector<std::vector<int>> prompts(static_cast<std::size_t>(n_prompts));
  for (auto& p : prompts) p = env.sample_prompt(rng);
  RolloutBatch batch =
      sample_rollouts(policy, env, prompts, n_rollouts, derive_seed(seed, 0xe7a2));
  score_rollouts(batch, env, metric, format_weight);

  EvalStats stats;
  std::size_t n = 0;
  std::size_t quality_n = 0;
  for (const auto& pr : batch.prompts) {
    for (const auto& s : pr.samples) {
      stats.mean_total_reward += s.reward.total;
      stats.format_compliance += s.reward.s_format;
      if (s.reward.has_quality) {
        stats.mean_quality += s.reward.raw_quality;
        ++quality_n;
      }
      ++n;
    }
  }
  if (n > 0) {
    stats.mean_total_reward /= static_cast<double>(n);
    stats.format_compliance /= static_cast<double>(n);
  }
  if (quality_n > 0) stats.mean_quality /= static_cast<double>(quality_n);
  return stats;
}

}  // namespace rmt
