#include "rmt/cot_templates.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "rmt/tokenize.hpp"

namespace rmt {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Hierarchical: return "Hierarchical";
    case Strategy::Triangulation: return "Triangulation";
    case Strategy::BackTranslation: return "BackTranslation";
    case Strategy::ContextAware: return "ContextAware";
    case Strategy::Explanation: return "Explanation";
    case Strategy::StructuralTransform: return "StructuralTransform";
  }
  return "Hierarchical";
}

std::optional<Strategy> strategy_from_string(std::string_view s) {
  if (s == "Hierarchical") return Strategy::Hierarchical;
  if (s == "Triangulation") return Strategy::Triangulation;
  if (s == "BackTranslation") return Strategy::BackTranslation;
  if (s == "ContextAware") return Strategy::ContextAware;
  if (s == "Explanation") return Strategy::Explanation;
  if (s == "StructuralTransform") return Strategy::StructuralTransform;
  return std::nullopt;
}

std::string strategy_display_name(Strategy s) {
  switch (s) {
    case Strategy::Hierarchical: return "Hierarchical Translation";
    case Strategy::Triangulation: return "Triangulating Translation";
    case Strategy::BackTranslation: return "Back Translation";
    case Strategy::ContextAware: return "Context-aware Translation";
    case Strategy::Explanation: return "Translation Explanation";
    case Strategy::StructuralTransform: return "Structural Transformation";
  }
  return "Hierarchical Translation";
}

Strategy next_strategy(Strategy s) {
  return static_cast<Strategy>((static_cast<int>(s) + 1) % kStrategyCount);
}

std::string to_string(PromptStage s) {
  switch (s) {
    case PromptStage::extract: return "extract";
    case PromptStage::select: return "select";
    case PromptStage::incorporate: return "incorporate";
    case PromptStage::refine: return "refine";
  }
  return "extract";
}

std::vector<std::string> parse_steps(const std::string& template_text) {
  std::vector<std::string> steps;
  std::size_t pos = 0;
  while (pos <= template_text.size()) {
    std::size_t eol = template_text.find('\n', pos);
    if (eol == std::string::npos) eol = template_text.size();
    const std::string_view line(template_text.data() + pos, eol - pos);

    std::size_t digits = 0;
    while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
    if (digits > 0 && digits + 1 < line.size() && line[digits] == '.' &&
        line[digits + 1] == ' ') {
      steps.emplace_back(line.substr(digits + 2));
    } else if (!steps.empty() && !trim_copy(line).empty()) {
      steps.back() += "\n" + std::string(line);
    }
    if (eol == template_text.size()) break;
    pos = eol + 1;
  }
  return steps;
}

std::string translation_instruction(const ParallelPair& pair) {
  return "Translate the following " + lang_display_name(pair.source_lang) + " text into " +
         lang_display_name(pair.target_lang) + ":\n" + pair.source_text;
}

PromptBundle render_extraction_prompt(const ParallelPair& pair) {
  PromptBundle b;
  b.stage = PromptStage::extract;
  b.system_text =
      "Assume you are an experienced linguist mastering multiple languages. Here is a user "
      "translation task, you need to review the input sentence and identify the key concepts "
      "that are crucial for understanding the translation. These concepts will guide the "
      "translation process.";
  b.user_text = "<translation task>\n\n" + translation_instruction(pair) +
                "\n\n</translation task>";
  return b;
}

PromptBundle render_selection_prompt(const KeyConcepts& concepts) {
  if (concepts.concepts.empty()) {
    throw std::invalid_argument("render_selection_prompt: no key concepts");
  }
  PromptBundle b;
  b.stage = PromptStage::select;
  b.system_text =
      "From the six available human translation CoT, select appropriate strategies for this "
      "translation task according to user provided key concepts :\n\n"
      "a. Hierarchical Translation:\n\n"
      "b. Triangular Translation:\n\n"
      "c. Back Translation:\n\n"
      "d. Context-aware Translation:\n\n"
      "e. Translation Explanation:\n\n"
      "f. Structural Transformation:\n\n"
      "Finally, please formulate the translation CoT process according to selected strategies "
      "and key concepts in the position between <think> </think>.";
  std::string joined;
  for (std::size_t i = 0; i < concepts.concepts.size(); ++i) {
    if (i > 0) joined += "\n";
    joined += concepts.concepts[i];
  }
  b.user_text = "<key concepts>\n\n" + joined + "\n\n</key concepts>";
  return b;
}

StrategyRules StrategyRules::defaults() {
  StrategyRules r;
  r.divergence_pairs = {{"en", "ja"}, {"ja", "en"}, {"en", "de"}, {"de", "en"}};
  r.explanation_domains = {"legal", "medical", "specialized"};
  return r;
}

Strategy select_strategy(const KeyConcepts& concepts, const StrategyRules& rules) {
  const auto& f = concepts.features;
  if (f.distant_pair) return Strategy::Triangulation;
  if (f.has_context) return Strategy::ContextAware;
  if (f.length_class == LengthClass::paragraph) return Strategy::Hierarchical;
  if (rules.explanation_domains.count(f.domain)) return Strategy::Explanation;
  if (rules.divergence_pairs.count({concepts.source_lang, concepts.target_lang})) {
    return Strategy::StructuralTransform;
  }
  return Strategy::BackTranslation;
}

namespace {

std::string_view script_of(std::string_view lang) {
  static const std::map<std::string_view, std::string_view> kScripts = {
      {"en", "latin"}, {"fr", "latin"}, {"de", "latin"}, {"nl", "latin"}, {"vi", "latin"},
      {"tr", "latin"}, {"cs", "latin"}, {"es", "latin"}, {"it", "latin"}, {"pt", "latin"},
      {"ru", "cyrillic"}, {"uk", "cyrillic"}, {"bg", "cyrillic"},
      {"zh", "han"}, {"ja", "japanese"}, {"ko", "hangul"},
      {"th", "thai"}, {"ar", "arabic"}, {"he", "hebrew"}, {"el", "greek"},
  };
  auto it = kScripts.find(lang);
  return it != kScripts.end() ? it->second : "latin";
}

}  // namespace

bool distant_by_script(std::string_view src_lang, std::string_view tgt_lang) {
  return script_of(src_lang) != script_of(tgt_lang);
}

KeyConcepts extract_key_concepts_offline(const ParallelPair& pair, std::size_t max_concepts,
                                         std::size_t paragraph_threshold) {
  KeyConcepts kc;
  kc.source_lang = pair.source_lang;
  kc.target_lang = pair.target_lang;
  kc.features.length_class = pair.source_token_count >= paragraph_threshold
                                 ? LengthClass::paragraph
                                 : LengthClass::sentence;
  kc.features.has_context = false;
  kc.features.distant_pair = distant_by_script(pair.source_lang, pair.target_lang);
  kc.features.domain = to_string(pair.domain);

  // Longest distinct tokens, earliest occurrence breaking ties.
  const auto tokens = tokenize(pair.source_text, pair.source_lang);
  std::vector<std::string> distinct;
  for (const auto& t : tokens) {
    if (std::find(distinct.begin(), distinct.end(), t) == distinct.end()) distinct.push_back(t);
  }
  std::stable_sort(distinct.begin(), distinct.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  if (distinct.size() > max_concepts) distinct.resize(max_concepts);
  kc.concepts = std::move(distinct);
  if (kc.concepts.empty()) kc.concepts.push_back(pair.source_text);
  return kc;
}

}  // namespace rmt
