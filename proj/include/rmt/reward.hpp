#pragma once

#include <optional>
#include <string>

#include "rmt/jsonl.hpp"
#include "rmt/metric.hpp"

namespace rmt {

// Inner spans plus the whitespace around them, so the original string can
// be reconstructed span-exactly.
struct StructuredOutput {
  std::string think_text;
  std::string answer_text;
  std::string leading_ws;
  std::string between_ws;
  std::string trailing_ws;
  std::string raw;

  std::string reconstruct() const {
    return leading_ws + "<think>" + think_text + "</think>" + between_ws + "<answer>" +
           answer_text + "</answer>" + trailing_ws;
  }
};

enum class FormatViolation {
  none,
  missing_tag,
  duplicate_tag,
  wrong_order,
  trailing_garbage,
  empty_answer,
};

std::string to_string(FormatViolation v);

struct ParseResult {
  bool ok = false;
  StructuredOutput output;
  FormatViolation violation = FormatViolation::none;
  std::string detail;  // names the first failed rule
};

// Accepts iff the text is optional whitespace, exactly one think block,
// optional whitespace, exactly one answer block, optional whitespace.
// Tags are case-sensitive; the answer must be nonempty after trimming.
ParseResult parse_structured(const std::string& text);

// 1 iff parse_structured accepts. Total on any input.
int format_reward(const std::string& text);

// 0 for x <= 0, otherwise x rounded half-away-from-zero to 3 decimals.
double discretize(double x);

struct RewardBreakdown {
  int s_format = 0;
  bool has_quality = false;  // false when the format gate already failed
  double raw_quality = 0.0;  // x
  double discretized = 0.0;  // R(x)
  double total = 0.0;
  std::string metric_id;
};

// Gated-additive combination: total = S_format * (format_weight + R(x)),
// so any well-formatted output strictly dominates any malformed one.
RewardBreakdown total_reward(const std::string& text, const std::string& reference,
                             const std::string& source, const QualityMetric& metric,
                             double format_weight = 1.0, const std::string& lang = "");

json reward_audit_row(const std::string& sample_id, const RewardBreakdown& b);

}  // namespace rmt
