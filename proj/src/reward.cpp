#include "rmt/reward.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rmt/tokenize.hpp"

namespace rmt {

std::string to_string(FormatViolation v) {
  switch (v) {
    case FormatViolation::none: return "none";
    case FormatViolation::missing_tag: return "missing tag";
    case FormatViolation::duplicate_tag: return "duplicate tag";
    case FormatViolation::wrong_order: return "wrong order";
    case FormatViolation::trailing_garbage: return "trailing garbage";
    case FormatViolation::empty_answer: return "empty answer";
  }
  return "unknown";
}

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::vector<std::size_t> find_all(const std::string& text, std::string_view tag) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while ((pos = text.find(tag, pos)) != std::string::npos) {
    out.push_back(pos);
    pos += 1;
  }
  return out;
}

bool all_whitespace(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != '\f' && c != '\v') return false;
  }
  return true;
}

ParseResult violation(FormatViolation v, std::string detail) {
  ParseResult r;
  r.ok = false;
  r.violation = v;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

ParseResult parse_structured(const std::string& text) {
  struct TagSpec {
    std::string_view tag;
    std::vector<std::size_t> hits;
  };
  TagSpec tags[4] = {{kThinkOpen, {}}, {kThinkClose, {}}, {kAnswerOpen, {}}, {kAnswerClose, {}}};
  for (auto& t : tags) t.hits = find_all(text, t.tag);

  // </think> contains no <think>, and </answer> no <answer>, so the raw
  // substring counts are already exact per tag.
  for (const auto& t : tags) {
    if (t.hits.empty()) {
      return violation(FormatViolation::missing_tag,
                       "missing tag " + std::string(t.tag));
    }
  }
  for (const auto& t : tags) {
    if (t.hits.size() > 1) {
      return violation(FormatViolation::duplicate_tag,
                       "duplicate tag " + std::string(t.tag));
    }
  }

  const std::size_t to = tags[0].hits[0];
  const std::size_t tc = tags[1].hits[0];
  const std::size_t ao = tags[2].hits[0];
  const std::size_t ac = tags[3].hits[0];
  if (!(to < tc && tc < ao && ao < ac)) {
    return violation(FormatViolation::wrong_order,
                     "tags must appear as <think>...</think><answer>...</answer>");
  }

  StructuredOutput out;
  out.raw = text;
  out.leading_ws = text.substr(0, to);
  out.think_text = text.substr(to + kThinkOpen.size(), tc - (to + kThinkOpen.size()));
  out.between_ws = text.substr(tc + kThinkClose.size(), ao - (tc + kThinkClose.size()));
  out.answer_text = text.substr(ao + kAnswerOpen.size(), ac - (ao + kAnswerOpen.size()));
  out.trailing_ws = text.substr(ac + kAnswerClose.size());

  if (!all_whitespace(out.leading_ws)) {
    return violation(FormatViolation::trailing_garbage, "text before <think>");
  }
  if (!all_whitespace(out.between_ws)) {
    return violation(FormatViolation::trailing_garbage, "text between </think> and <answer>");
  }
  if (!all_whitespace(out.trailing_ws)) {
    return violation(FormatViolation::trailing_garbage, "text after </answer>");
  }
  if (trim_copy(out.answer_text).empty()) {
    return violation(FormatViolation::empty_answer, "answer is empty");
  }

  ParseResult r;
  r.ok = true;
  r.output = std::move(out);
  return r;
}

int format_reward(const std::string& text) {
  return parse_structured(text).ok ? 1 : 0;
}

double discretize(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("discretize: quality score is not finite");
  }
  if (x <= 0.0) return 0.0;
  // std::round is half-away-from-zero, pinned here because platforms
  // disagree on default rounding conventions.
  return std::round(x * 1000.0) / 1000.0;
}

RewardBreakdown total_reward(const std::string& text, const std::string& reference,
                             const std::string& source, const QualityMetric& metric,
                             double format_weight, const std::string& lang) {
  if (trim_copy(reference).empty()) {
    throw std::invalid_argument("total_reward: reference must be nonempty");
  }
  RewardBreakdown b;
  b.metric_id = metric.metric_id();
  const ParseResult parsed = parse_structured(text);
  b.s_format = parsed.ok ? 1 : 0;
  if (!parsed.ok) {
    b.total = 0.0;
    return b;
  }
  b.has_quality = true;
  b.raw_quality = metric.score(parsed.output.answer_text, reference, source, lang);
  b.discretized = discretize(b.raw_quality);
  b.total = format_weight + b.discretized;
  return b;
}

json reward_audit_row(const std::string& sample_id, const RewardBreakdown& b) {
  json j{{"sample_id", sample_id},
         {"s_format", b.s_format},
         {"discretized", b.discretized},
         {"total", b.total},
         {"metric_id", b.metric_id}};
  if (b.has_quality) {
    j["x"] = b.raw_quality;
  } else {
    j["x"] = nullptr;
  }
  return j;
}

}  // namespace rmt
