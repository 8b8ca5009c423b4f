#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rmt/corpus.hpp"
#include "rmt/cot_templates.hpp"
#include "rmt/gateway.hpp"
#include "rmt/metric.hpp"

namespace rmt {

// Prompt fixture version for the instantiate/refine stages.
inline constexpr const char* kSynthesisPromptVersion = "synth-prompts-v1";

// One template/confidence/answer triple of a refinement chain.
struct RefinementStep {
  int step_index = 0;
  Strategy strategy = Strategy::Hierarchical;
  std::string template_text;
  std::string cot;
  std::string answer;
  std::optional<double> confidence;  // absent when the step failed
  bool ok = false;
  std::string raw_text;  // retained for audit when unparseable
  std::string failure;
};

enum class ChainStatus { running, converged, exhausted, failed };

std::string to_string(ChainStatus s);
std::optional<ChainStatus> chain_status_from_string(std::string_view s);

struct RefinementChain {
  ParallelPair pair;
  std::vector<RefinementStep> steps;
  ChainStatus status = ChainStatus::running;
  std::string metric_id;

  std::optional<double> best_confidence() const;
};

struct RefineConfig {
  int max_steps = 4;
  double threshold = 0.85;
  double min_gain = 0.01;
  int patience = 2;
  // true: the critic revises the prior reasoning in place; false: each
  // retry instantiates the next template instead.
  bool revise_in_place = true;
  double generate_temperature = 0.7;
  double critic_temperature = 0.0;
  std::string model_id = "default";
  int max_tokens = 2048;
};

struct CotRecord {
  ParallelPair pair;
  std::string cot;
  std::string answer;
  double confidence = 0.0;
  Strategy strategy = Strategy::Hierarchical;
  int steps_used = 0;
  std::string metric_id;
};

struct Rejection {
  std::string pair_id;
  std::string reason;
};

PromptBundle render_incorporate_prompt(const ParallelPair& pair, const CotTemplate& tmpl);
PromptBundle render_refine_prompt(const ParallelPair& pair, const RefinementStep& prior);

RefinementStep generate_step(const ParallelPair& pair, const CotTemplate& tmpl,
                             LlmGateway& gateway, const QualityMetric& metric,
                             const RefineConfig& config = {});

// Appends steps until the newest confidence reaches the threshold
// (converged), the step cap is hit, or the best confidence stalls for
// `patience` consecutive steps (exhausted). A chain whose every step
// failed ends as failed.
RefinementChain refine(RefinementChain chain, const RefineConfig& config, LlmGateway& gateway,
                       const QualityMetric& metric);

// Best step by confidence, earliest on ties; below the floor -> rejection.
std::variant<CotRecord, Rejection> accept(const RefinementChain& chain,
                                          double accept_floor = 0.3);

std::size_t export_sft(const std::vector<CotRecord>& records, const std::string& path);
std::size_t export_rl_prompts(const std::vector<CotRecord>& records, const std::string& path);

json chain_to_json(const RefinementChain& chain);
RefinementChain chain_from_json(const json& j, const std::string& name, std::size_t lineno);

json record_to_json(const CotRecord& r);
CotRecord record_from_json(const json& j, const std::string& name, std::size_t lineno);

struct SynthesisConfig {
  RefineConfig refine;
  double accept_floor = 0.3;
  StrategyRules rules = StrategyRules::defaults();
};

struct SynthesisCounts {
  std::size_t chains_written = 0;
  std::size_t resumed = 0;
  std::size_t converged = 0;
  std::size_t exhausted = 0;
  std::size_t failed = 0;
};

// Runs the per-pair chains in corpus order and appends one chain JSON line
// per pair to chains_path; pairs already present there are skipped, so an
// interrupted run resumes idempotently. audit_path (optional) receives one
// row per step: {"pair_id","step","template","f","status"}.
SynthesisCounts run_synthesis(const CorpusSet& corpus, const SynthesisConfig& config,
                              LlmGateway& gateway, const QualityMetric& metric,
                              const std::string& chains_path,
                              const std::string& audit_path = "");

}  // namespace rmt
