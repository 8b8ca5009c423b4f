#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rmt/corpus.hpp"

namespace rmt {

enum class Strategy {
  Hierarchical,
  Triangulation,
  BackTranslation,
  ContextAware,
  Explanation,
  StructuralTransform,
};

inline constexpr int kStrategyCount = 6;

std::string to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view s);
std::string strategy_display_name(Strategy s);  // e.g. "Hierarchical Translation"
Strategy next_strategy(Strategy s);

// One of the six expert-strategy reasoning templates. template_text is the
// numbered-step text placed between think delimiters.
struct CotTemplate {
  Strategy strategy;
  std::vector<std::string> steps;
  std::string template_text;
};

// Fixture version; bump when any template text changes.
inline constexpr const char* kTemplateFixtureVersion = "cot-templates-v1";

const std::vector<CotTemplate>& list_templates();
const CotTemplate& template_for(Strategy s);

// Recovers the numbered step list from template_text.
std::vector<std::string> parse_steps(const std::string& template_text);

enum class PromptStage { extract, select, incorporate, refine };

std::string to_string(PromptStage s);

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  PromptStage stage;
};

enum class LengthClass { sentence, paragraph };

struct KeyConceptFeatures {
  LengthClass length_class = LengthClass::sentence;
  bool has_context = false;
  bool distant_pair = false;
  std::string domain = "other";
};

struct KeyConcepts {
  std::vector<std::string> concepts;
  std::string source_lang;
  std::string target_lang;
  KeyConceptFeatures features;
};

// The per-pair instruction used in prompts and exported datasets.
std::string translation_instruction(const ParallelPair& pair);

PromptBundle render_extraction_prompt(const ParallelPair& pair);
PromptBundle render_selection_prompt(const KeyConcepts& concepts);

struct StrategyRules {
  // Ordered (source, target) pairs with divergent word order.
  std::set<std::pair<std::string, std::string>> divergence_pairs;
  std::set<std::string> explanation_domains;

  static StrategyRules defaults();
};

// Deterministic rule cascade, most specific signal first. Offline fallback
// for the model-driven selection step, so the pipeline is testable without
// any model behind it.
Strategy select_strategy(const KeyConcepts& concepts,
                         const StrategyRules& rules = StrategyRules::defaults());

// Default notion of a distant pair: the two languages use different scripts.
bool distant_by_script(std::string_view src_lang, std::string_view tgt_lang);

// Heuristic concept extraction used when no model performs extraction:
// longest distinct source tokens plus features derived from the pair.
KeyConcepts extract_key_concepts_offline(const ParallelPair& pair,
                                         std::size_t max_concepts = 5,
                                         std::size_t paragraph_threshold = 100);

}  // namespace rmt
