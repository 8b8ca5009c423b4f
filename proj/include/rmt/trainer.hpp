#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmt/toy_env.hpp"

namespace rmt {

enum class BaselineMode { group_mean, batch_mean };

std::optional<BaselineMode> baseline_mode_from_string(std::string_view s);
std::string to_string(BaselineMode m);

// advantage = total reward - baseline; the baseline is the mean reward of
// the sample's rollout group (default) or of the whole batch. With
// normalization every advantage is divided by the global batch standard
// deviation, floored at eps.
void compute_advantages(RolloutBatch& batch, BaselineMode mode = BaselineMode::group_mean,
                        bool normalize = true, double eps = 1e-8);

struct UpdateOptions {
  double kl_beta = 0.0;
  const ToyPolicy* reference = nullptr;  // required when kl_beta > 0
};

struct UpdateResult {
  ToyPolicy policy;
  double grad_norm = 0.0;
};

// theta' = theta + alpha * mean_k advantage_k * grad log P(sample_k),
// with the analytic softmax/sigmoid gradient, optionally minus
// kl_beta * grad KL(policy || reference).
UpdateResult update(const ToyPolicy& policy, const RolloutBatch& batch, double alpha,
                    const UpdateOptions& opts = {});

// Brute-force oracle: exact expected total reward for one prompt by
// enumerating every (format bit, token sequence) output. Enumeration size
// 2 * V^L is capped at 10^6.
double exact_expected_reward(const ToyPolicy& policy, const SyntheticEnv& env,
                             const std::vector<int>& source, const QualityMetric& metric,
                             double format_weight = 1.0);

double exact_expected_reward(const ToyPolicy& policy, const SyntheticEnv& env,
                             const std::vector<std::vector<int>>& sources,
                             const QualityMetric& metric, double format_weight = 1.0);

// Exact gradient of expected reward via sum over outputs of
// P * R * grad log P (zero baseline), same enumeration as the oracle.
// Layout: V*V emission entries then the format logit.
std::vector<double> exact_reward_gradient(const ToyPolicy& policy, const SyntheticEnv& env,
                                          const std::vector<std::vector<int>>& sources,
                                          const QualityMetric& metric,
                                          double format_weight = 1.0);

struct GradientCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  double analytic_at_worst = 0.0;
  double fd_at_worst = 0.0;
};

GradientCheckReport gradient_check(const ToyPolicy& policy, const SyntheticEnv& env,
                                   const std::vector<std::vector<int>>& sources,
                                   const QualityMetric& metric, double h = 1e-5,
                                   double format_weight = 1.0);

struct TrainConfig {
  int epochs = 3;
  int batches_per_epoch = 200;
  int batch_prompts = 8;
  int n_rollouts = 16;
  double lr = 0.05;  // toy-regime default; expects scaling for real models
  double theta_f_init = 0.0;
  std::uint64_t seed = 0;
  BaselineMode baseline = BaselineMode::group_mean;
  bool normalize_advantages = true;
  double kl_beta = 0.0;
  double format_weight = 1.0;
  double divergence_bound = 50.0;  // abort when mean |theta| exceeds this
};

struct EpochStats {
  int epoch = 0;
  double mean_total_reward = 0.0;
  double mean_s_format = 0.0;
  double mean_quality = 0.0;  // over formatted samples
  double grad_norm = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  json config_echo;
  bool diverged = false;
};

struct TrainResult {
  TrainReport report;
  ToyPolicy policy;
};

json train_config_echo(const TrainConfig& config);
std::string train_config_hash(const TrainConfig& config);

TrainResult train(const TrainConfig& config, const SyntheticEnv& env,
                  const QualityMetric& metric);

void report_to_csv(const TrainReport& report, const std::string& path);
void report_to_jsonl(const TrainReport& report, const std::string& path);

// Deterministic evaluation pass (no updates): mean total reward and format
// compliance over a fixed prompt set.
struct EvalStats {
  double mean_total_reward = 0.0;
  double format_compliance = 0.0;
  double mean_quality = 0.0;
};

EvalStats evaluate_policy(const ToyPolicy& policy, const SyntheticEnv& env,
                          const QualityMetric& metric, int n_prompts, int n_rollouts,
                          std::uint64_t seed, double format_weight = 1.0);

}  // namespace rmt
