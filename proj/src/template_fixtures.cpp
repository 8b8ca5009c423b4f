// Immutable reasoning-template fixtures, one per strategy. Treat as frozen:
// any edit requires bumping kTemplateFixtureVersion.

#include "rmt/cot_templates.hpp"

namespace rmt {

namespace {

std::string join_numbered(const std::vector<std::string>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += std::to_string(i + 1) + ". " + steps[i];
  }
  return out;
}

CotTemplate make_template(Strategy s, std::vector<std::string> steps) {
  CotTemplate t;
  t.strategy = s;
  t.template_text = join_numbered(steps);
  t.steps = std::move(steps);
  return t;
}

std::vector<CotTemplate> build_templates() {
  std::vector<CotTemplate> out;

  out.push_back(make_template(
      Strategy::Hierarchical,
      {
          "Analyze the sentence structure and identify the core elements (subject, verb, "
          "object).",
          "Translate the sentence from the origin language to the target language, focusing on "
          "the core elements.",
          "Review the translation for basic accuracy and grammatical structure.",
          "Identify areas that need further refinement (e.g., word choice, tense, or word "
          "order).",
          "Modify the translation to improve fluency and coherence, considering the context.",
          "Finalize the translation by ensuring it retains the original meaning while improving "
          "readability.",
      }));

  out.push_back(make_template(
      Strategy::Triangulation,
      {
          "Identify basic elements: Break down the sentence into its main components and "
          "identify the key subject, verb, and object.",
          "Translate to intermediate language: Convert these elements into an intermediate "
          "language structure (e.g., simple syntactic rules or function names).",
          "Refine back to target language: Translate from the intermediate language back to the "
          "target language, adjusting for syntactic norms and idiomatic expressions.",
          "Check for accuracy: Ensure that the meaning is preserved in the translated sentence "
          "by checking noun-verb agreement and connectors.",
          "Adjust word order: Modify word order to ensure that it aligns with the target "
          "language’s grammatical structure.",
          "Final refinement: Review the translation for naturalness, idiomatic use, and overall "
          "flow.",
      }));

  out.push_back(make_template(
      Strategy::BackTranslation,
      {
          "Analyze the provided context in the source language.",
          "Translate the source text to the target language.",
          "Perform back translation from the target language to the source language.",
          "Compare the back translation with the original source context.",
          "Evaluate whether the meaning of the back translation aligns with the original.",
          "If discrepancies are identified, adjust the target language translation to enhance "
          "consistency with the original meaning.",
          "Finalize the translation by ensuring both forward and back translations accurately "
          "align across all languages involved.",
      }));

  out.push_back(make_template(
      Strategy::ContextAware,
      {
          "Analyze the current sentence, along with the previous sentences, to understand the "
          "overall conversation context.",
          "Identify key elements like tone, formality, or subject matter based on the ongoing "
          "conversation.",
          "Translate the sentence while ensuring that the translation is aligned with the tone, "
          "style, and subject of the preceding dialogue.",
          "If any ambiguity exists in the translation due to context, refine the translation to "
          "better fit the conversation flow.",
          "Verify that the translation maintains coherence with the larger conversation, "
          "ensuring consistency in language and tone.",
          "Finalize the translation by cross-checking it with the conversation’s context to "
          "ensure it feels natural and appropriately aligned.",
      }));

  out.push_back(make_template(
      Strategy::Explanation,
      {
          "Analyze the source sentence and identify the key elements (verbs, subjects, objects, "
          "etc.).",
          "Based on these elements, determine the most suitable translation strategy (literal "
          "vs. idiomatic).",
          "Select the best translation for each word or phrase, considering context and "
          "language-specific structures.",
          "Explain the rationale behind choosing specific words or phrases.",
          "After completing the initial translation, review each translation decision and "
          "explain any adjustments made for fluency or accuracy.",
          "Provide a final explanation for the translation choices, discussing any trade-offs "
          "made between literal meaning and contextual appropriateness.",
      }));

  out.push_back(make_template(
      Strategy::StructuralTransform,
      {
          "Analyze the sentence's syntactic structure in the source language (e.g., identify "
          "whether it’s active or passive).",
          "Determine the most appropriate syntactic structure in the target language (e.g., "
          "whether it needs to be rephrased from active to passive or vice versa).",
          "Adjust the word order and grammatical structure in the target language to match the "
          "sentence’s meaning, while maintaining clarity.",
          "Translate the sentence, ensuring that subject-verb-object relationships and other "
          "syntactic elements align with target language norms.",
          "After the translation, check the sentence's grammar and overall flow in the target "
          "language, making sure it is clear and fluid.",
          "If the sentence feels awkward or unnatural, refine the structure by adjusting word "
          "choice or reordering components.",
      }));

  return out;
}

}  // namespace

const std::vector<CotTemplate>& list_templates() {
  static const std::vector<CotTemplate> templates = build_templates();
  return templates;
}

const CotTemplate& template_for(Strategy s) {
  for (const auto& t : list_templates()) {
    if (t.strategy == s) return t;
  }
  throw std::logic_error("template_for: unmapped strategy");
}

}  // namespace rmt
