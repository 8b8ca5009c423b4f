#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rmt/reports.hpp"
#include "test_util.hpp"

using namespace rmt;
using namespace rmt::testutil;

namespace {

std::string scores_fixture() {
  return
      R"({"model":"m1","src_lang":"fr","tgt_lang":"en","score":0.7})" "\n"
      R"({"model":"m1","src_lang":"fr","tgt_lang":"en","score":0.9})" "\n"
      R"({"model":"m1","src_lang":"en","tgt_lang":"zh","score":0.5})" "\n"
      R"({"model":"m1","src_lang":"zh","tgt_lang":"ja","score":0.4})" "\n";
}

const ReportRow& row_for(const ReportTable& t, const std::string& model) {
  for (const auto& r : t.rows) {
    if (r.model == model) return r;
  }
  throw std::runtime_error("no such row: " + model);
}

std::optional<DirectionScore> cell_at(const ReportTable& t, const ReportRow& row,
                                      const std::string& group, const std::string& label) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i].group == group && t.columns[i].label == label) return row.cells[i];
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("aggregate: per-cell means, duplicated pivot cells, row average") {
  TempDir tmp("rep");
  write_text(tmp.path("scores.jsonl"), scores_fixture());
  const ReportTable table = aggregate(tmp.path("scores.jsonl"), Grouping::en_zh_centric);

  const ReportRow& row = row_for(table, "m1");
  const auto fr2en = cell_at(table, row, "xx2en", "fr");
  REQUIRE(fr2en.has_value());
  CHECK(fr2en->mean_score == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(fr2en->n == 2);

  // en->zh appears under both en2xx(zh) and xx2zh(en).
  const auto en2zh = cell_at(table, row, "en2xx", "zh");
  const auto xx2zh = cell_at(table, row, "xx2zh", "en");
  REQUIRE(en2zh.has_value());
  REQUIRE(xx2zh.has_value());
  CHECK(en2zh->mean_score == 0.5);
  CHECK(xx2zh->mean_score == 0.5);

  const auto zh2ja = cell_at(table, row, "zh2xx", "ja");
  REQUIRE(zh2ja.has_value());
  CHECK(zh2ja->mean_score == 0.4);

  // populated cells: fr2en, en2xx:zh, zh2xx:ja, xx2zh:en
  CHECK(row.populated == 4);
  CHECK(row.avg == doctest::Approx((0.8 + 0.5 + 0.4 + 0.5) / 4.0).epsilon(1e-12));
}

TEST_CASE("aggregate: single direction keeps avg equal to the cell") {
  TempDir tmp("rep");
  write_text(tmp.path("one.jsonl"),
             R"({"model":"m","src_lang":"de","tgt_lang":"en","score":0.62345})" "\n");
  const ReportTable table = aggregate(tmp.path("one.jsonl"), Grouping::en_zh_centric);
  const ReportRow& row = row_for(table, "m");
  CHECK(row.populated == 1);
  CHECK(row.avg == 0.62345);
}

TEST_CASE("aggregate: missing fields report the line number") {
  TempDir tmp("rep");
  write_text(tmp.path("bad.jsonl"),
             std::string(R"({"model":"m","src_lang":"de","tgt_lang":"en","score":0.5})") + "\n" +
                 R"({"model":"m","src_lang":"de","score":0.5})" + "\n");
  try {
    aggregate(tmp.path("bad.jsonl"), Grouping::flat);
    FAIL("expected LineError");
  } catch (const LineError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("tgt_lang") != std::string::npos);
  }
}

TEST_CASE("column order follows the published header order") {
  std::vector<ScoreRow> rows;
  for (const std::string lang : {"de", "zh", "ja"}) {
    rows.push_back({"m", lang, "en", 0.5});
  }
  const ReportTable table = aggregate_scores(rows, Grouping::en_zh_centric);
  std::vector<std::string> xx2en_labels;
  for (const auto& c : table.columns) {
    if (c.group == "xx2en") xx2en_labels.push_back(c.label);
  }
  CHECK(xx2en_labels == std::vector<std::string>{"zh", "ja", "de"});
}

TEST_CASE("directions outside the pivot groups are counted, flat mode keeps them") {
  std::vector<ScoreRow> rows = {{"m", "fr", "de", 0.5}, {"m", "fr", "en", 0.6}};
  const ReportTable centric = aggregate_scores(rows, Grouping::en_zh_centric);
  CHECK(centric.dropped_directions == 1);
  CHECK(centric.columns.size() == 1);

  const ReportTable flat = aggregate_scores(rows, Grouping::flat);
  CHECK(flat.dropped_directions == 0);
  CHECK(flat.columns.size() == 2);
  CHECK(flat.columns[0].label == "fr2de");
}

TEST_CASE("markdown: 3-decimal cells, dashes for gaps, deterministic bytes") {
  std::vector<ScoreRow> rows = {{"m1", "fr", "en", 0.62345}, {"m2", "de", "en", 0.5}};
  const ReportTable table = aggregate_scores(rows, Grouping::en_zh_centric);
  const std::string md = render_markdown(table);
  CHECK(md.find("0.623") != std::string::npos);
  CHECK(md.find("0.62345") == std::string::npos);
  CHECK(md.find(" - ") != std::string::npos);  // m1 has no de->en cell
  CHECK(md.find("xx2en:fr") != std::string::npos);
  CHECK(md.find("avg = arithmetic mean over populated cells") != std::string::npos);
  CHECK(md == render_markdown(table));

  TempDir tmp("rep");
  emit_report(table, ReportFormat::markdown, tmp.path("a.md"));
  emit_report(table, ReportFormat::markdown, tmp.path("b.md"));
  CHECK(slurp(tmp.path("a.md")) == slurp(tmp.path("b.md")));
}

TEST_CASE("csv round trip: re-aggregating the emitted csv rebuilds the cells") {
  TempDir tmp("rep");
  write_text(tmp.path("scores.jsonl"), scores_fixture());
  const ReportTable table = aggregate(tmp.path("scores.jsonl"), Grouping::en_zh_centric);
  emit_report(table, ReportFormat::csv, tmp.path("table.csv"));

  // Parse the csv back into score rows (header then model,src,tgt,score,n).
  std::vector<ScoreRow> rows;
  std::istringstream in(slurp(tmp.path("table.csv")));
  std::string line;
  std::getline(in, line);
  CHECK(line == "model,src_lang,tgt_lang,score,n");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cols.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    REQUIRE(cols.size() == 5);
    rows.push_back({cols[0], cols[1], cols[2], std::stod(cols[3])});
  }
  const ReportTable again = aggregate_scores(rows, Grouping::en_zh_centric);
  REQUIRE(again.columns.size() == table.columns.size());
  const ReportRow& a = row_for(table, "m1");
  const ReportRow& b = row_for(again, "m1");
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    REQUIRE(a.cells[i].has_value() == b.cells[i].has_value());
    if (a.cells[i]) {
      // formatting rounds to 3 decimals; cells agree at that precision
      CHECK(format_score(a.cells[i]->mean_score) == format_score(b.cells[i]->mean_score));
    }
  }
  CHECK(format_score(a.avg) == format_score(b.avg));
}

TEST_CASE("empty table renders a header-only report") {
  const ReportTable table = aggregate_scores({}, Grouping::en_zh_centric);
  const std::string md = render_markdown(table);
  CHECK(md.rfind("| Model | avg |", 0) == 0);
  const std::string csv = render_csv(table);
  CHECK(csv == "model,src_lang,tgt_lang,score,n\n");
}

TEST_CASE("table json round trip") {
  TempDir tmp("rep");
  write_text(tmp.path("scores.jsonl"), scores_fixture());
  const ReportTable table = aggregate(tmp.path("scores.jsonl"), Grouping::en_zh_centric);
  const ReportTable back = table_from_json(table_to_json(table));
  CHECK(render_markdown(back) == render_markdown(table));
  CHECK(render_csv(back) == render_csv(table));
}

TEST_CASE("format_score renders exactly three decimals") {
  CHECK(format_score(0.62345) == "0.623");
  CHECK(format_score(0.0) == "0.000");
  CHECK(format_score(-0.123456) == "-0.123");
  CHECK(format_score(1.0) == "1.000");
}
