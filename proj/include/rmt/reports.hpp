#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rmt/jsonl.hpp"

namespace rmt {

struct DirectionScore {
  std::string src_lang;
  std::string tgt_lang;
  double mean_score = 0.0;
  int n = 0;
};

enum class Grouping { en_zh_centric, flat };

std::optional<Grouping> grouping_from_string(std::string_view s);
std::string to_string(Grouping g);

// One pivot column: its group header, the short language label shown in
// the header, and the direction it selects.
struct ColumnSpec {
  std::string group;  // "xx2en", "en2xx", "zh2xx", "xx2zh", or "direction"
  std::string label;
  std::string src_lang;
  std::string tgt_lang;
};

struct ReportRow {
  std::string model;
  std::vector<std::optional<DirectionScore>> cells;  // aligned with columns
  double avg = 0.0;  // arithmetic mean over populated cells
  int populated = 0;
};

struct ReportTable {
  Grouping grouping = Grouping::en_zh_centric;
  std::vector<ColumnSpec> columns;
  std::vector<ReportRow> rows;  // sorted by model
  std::size_t dropped_directions = 0;  // outside the pivot groups
};

struct ScoreRow {
  std::string model;
  std::string src_lang;
  std::string tgt_lang;
  double score = 0.0;
};

// Scores JSONL rows carry {"model","src_lang","tgt_lang","score"}.
std::vector<ScoreRow> load_scores(const std::string& path);

ReportTable aggregate_scores(const std::vector<ScoreRow>& rows, Grouping grouping);
ReportTable aggregate(const std::string& scores_path, Grouping grouping);

enum class ReportFormat { markdown, csv };

std::optional<ReportFormat> report_format_from_string(std::string_view s);

std::string render_markdown(const ReportTable& table);
std::string render_csv(const ReportTable& table);
void emit_report(const ReportTable& table, ReportFormat format, const std::string& path);

json table_to_json(const ReportTable& table);
ReportTable table_from_json(const json& j);

// Fixed 3-decimal cell rendering used across reports.
std::string format_score(double v);

}  // namespace rmt
