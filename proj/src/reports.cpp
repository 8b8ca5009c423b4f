#include "rmt/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>

namespace rmt {

std::optional<Grouping> grouping_from_string(std::string_view s) {
  if (s == "en_zh_centric") return Grouping::en_zh_centric;
  if (s == "flat") return Grouping::flat;
  return std::nullopt;
}

std::string to_string(Grouping g) {
  return g == Grouping::en_zh_centric ? "en_zh_centric" : "flat";
}

std::optional<ReportFormat> report_format_from_string(std::string_view s) {
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  return std::nullopt;
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::vector<ScoreRow> load_scores(const std::string& path) {
  std::vector<ScoreRow> rows;
  for_each_jsonl(path, [&](std::size_t lineno, const json& j) {
    for (const char* key : {"model", "src_lang", "tgt_lang", "score"}) {
      if (!j.contains(key)) {
        throw LineError(path, lineno, std::string("missing field \"") + key + "\"");
      }
    }
    if (!j.at("score").is_number()) throw LineError(path, lineno, "score is not a number");
    ScoreRow r;
    r.model = j.at("model").get<std::string>();
    r.src_lang = j.at("src_lang").get<std::string>();
    r.tgt_lang = j.at("tgt_lang").get<std::string>();
    r.score = j.at("score").get<double>();
    rows.push_back(std::move(r));
  });
  return rows;
}

namespace {

// Header order of the published layout, then anything else alphabetically.
int lang_rank(const std::string& lang) {
  static const std::vector<std::string> kOrder = {"zh", "ja", "ru", "fr", "de", "th",
                                                  "nl", "vi", "tr", "cs", "en"};
  for (std::size_t i = 0; i < kOrder.size(); ++i) {
    if (kOrder[i] == lang) return static_cast<int>(i);
  }
  return static_cast<int>(kOrder.size());
}

bool lang_less(const std::string& a, const std::string& b) {
  const int ra = lang_rank(a);
  const int rb = lang_rank(b);
  if (ra != rb) return ra < rb;
  return a < b;
}

using Direction = std::pair<std::string, std::string>;

}  // namespace

ReportTable aggregate_scores(const std::vector<ScoreRow>& rows, Grouping grouping) {
  // Per (model, direction) running sums.
  std::map<std::string, std::map<Direction, std::pair<double, int>>> sums;
  std::set<Direction> directions;
  for (const auto& r : rows) {
    auto& cell = sums[r.model][{r.src_lang, r.tgt_lang}];
    cell.first += r.score;
    cell.second += 1;
    directions.insert({r.src_lang, r.tgt_lang});
  }

  ReportTable table;
  table.grouping = grouping;

  if (grouping == Grouping::flat) {
    std::vector<Direction> ordered(directions.begin(), directions.end());
    std::sort(ordered.begin(), ordered.end());
    for (const auto& d : ordered) {
      table.columns.push_back({"direction", d.first + "2" + d.second, d.first, d.second});
    }
  } else {
    struct GroupSpec {
      const char* name;
      bool label_is_src;
    };
    // en->zh shows up under both en2xx(zh) and xx2zh(en), matching the
    // published column groups.
    const std::vector<std::pair<GroupSpec, std::function<bool(const Direction&)>>> groups = {
        {{"xx2en", true}, [](const Direction& d) { return d.second == "en"; }},
        {{"en2xx", false}, [](const Direction& d) { return d.first == "en"; }},
        {{"zh2xx", false}, [](const Direction& d) { return d.first == "zh"; }},
        {{"xx2zh", true}, [](const Direction& d) { return d.second == "zh"; }},
    };
    std::set<Direction> covered;
    for (const auto& [spec, pred] : groups) {
      std::vector<Direction> members;
      for (const auto& d : directions) {
        if (pred(d)) {
          members.push_back(d);
          covered.insert(d);
        }
      }
      std::sort(members.begin(), members.end(), [&](const Direction& a, const Direction& b) {
        const std::string& la = spec.label_is_src ? a.first : a.second;
        const std::string& lb = spec.label_is_src ? b.first : b.second;
        return lang_less(la, lb);
      });
      for (const auto& d : members) {
        table.columns.push_back(
            {spec.name, spec.label_is_src ? d.first : d.second, d.first, d.second});
      }
    }
    table.dropped_directions = directions.size() - covered.size();
  }

  for (const auto& [model, cells] : sums) {
    ReportRow row;
    row.model = model;
    double sum = 0.0;
    for (const auto& col : table.columns) {
      auto it = cells.find({col.src_lang, col.tgt_lang});
      if (it == cells.end()) {
        row.cells.push_back(std::nullopt);
        continue;
      }
      DirectionScore ds;
      ds.src_lang = col.src_lang;
      ds.tgt_lang = col.tgt_lang;
      ds.n = it->second.second;
      ds.mean_score = it->second.first / static_cast<double>(it->second.second);
      sum += ds.mean_score;
      ++row.populated;
      row.cells.push_back(ds);
    }
    row.avg = row.populated > 0 ? sum / static_cast<double>(row.populated) : 0.0;
    table.rows.push_back(std::move(row));
  }
  return table;
}

ReportTable aggregate(const std::string& scores_path, Grouping grouping) {
  return aggregate_scores(load_scores(scores_path), grouping);
}

std::string render_markdown(const ReportTable& table) {
  std::string out;
  out += "| Model |";
  for (const auto& c : table.columns) {
    if (table.grouping == Grouping::en_zh_centric) {
      out += " " + c.group + ":" + c.label + " |";
    } else {
      out += " " + c.label + " |";
    }
  }
  out += " avg |\n";
  out += "|---|";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += "---|";
  out += "---|\n";
  for (const auto& row : table.rows) {
    out += "| " + row.model + " |";
    for (const auto& cell : row.cells) {
      out += cell ? (" " + format_score(cell->mean_score) + " |") : " - |";
    }
    out += " " + format_score(row.avg) + " |\n";
  }
  out += "\n";
  out += "avg = arithmetic mean over populated cells of the row.\n";
  if (table.dropped_directions > 0) {
    out += std::to_string(table.dropped_directions) +
           " direction(s) outside the pivot groups omitted.\n";
  }
  return out;
}

std::string render_csv(const ReportTable& table) {
  // One row per unique (model, direction); duplicate pivot cells collapse.
  std::string out = "model,src_lang,tgt_lang,score,n\n";
  for (const auto& row : table.rows) {
    std::set<Direction> seen;
    for (const auto& cell : row.cells) {
      if (!cell) continue;
      if (!seen.insert({cell->src_lang, cell->tgt_lang}).second) continue;
      out += row.model + "," + cell->src_lang + "," + cell->tgt_lang + "," +
             format_score(cell->mean_score) + "," + std::to_string(cell->n) + "\n";
    }
  }
  return out;
}

void emit_report(const ReportTable& table, ReportFormat format, const std::string& path) {
  auto out = open_for_write(path);
  out << (format == ReportFormat::markdown ? render_markdown(table) : render_csv(table));
}

json table_to_json(const ReportTable& table) {
  json cols = json::array();
  for (const auto& c : table.columns) {
    cols.push_back({{"group", c.group},
                    {"label", c.label},
                    {"src_lang", c.src_lang},
                    {"tgt_lang", c.tgt_lang}});
  }
  json rows = json::array();
  for (const auto& r : table.rows) {
    json cells = json::array();
    for (const auto& cell : r.cells) {
      if (!cell) {
        cells.push_back(nullptr);
      } else {
        cells.push_back({{"src_lang", cell->src_lang},
                         {"tgt_lang", cell->tgt_lang},
                         {"mean_score", cell->mean_score},
                         {"n", cell->n}});
      }
    }
    rows.push_back({{"model", r.model}, {"cells", cells}, {"avg", r.avg},
                    {"populated", r.populated}});
  }
  return json{{"grouping", to_string(table.grouping)},
              {"columns", cols},
              {"rows", rows},
              {"dropped_directions", table.dropped_directions}};
}

ReportTable table_from_json(const json& j) {
  ReportTable table;
  auto grouping = grouping_from_string(j.at("grouping").get<std::string>());
  if (!grouping) throw std::runtime_error("table: unknown grouping");
  table.grouping = *grouping;
  table.dropped_directions = j.value("dropped_directions", 0u);
  for (const auto& c : j.at("columns")) {
    table.columns.push_back({c.at("group").get<std::string>(), c.at("label").get<std::string>(),
                             c.at("src_lang").get<std::string>(),
                             c.at("tgt_lang").get<std::string>()});
  }
  for (const auto& r : j.at("rows")) {
    ReportRow row;
    row.model = r.at("model").get<std::string>();
    row.avg = r.at("avg").get<double>();
    row.populated = r.at("populated").get<int>();
    for (const auto& cell : r.at("cells")) {
      if (cell.is_null()) {
        row.cells.push_back(std::nullopt);
      } else {
        DirectionScore ds;
        ds.src_lang = cell.at("src_lang").get<std::string>();
        ds.tgt_lang = cell.at("tgt_lang").get<std::string>();
        ds.mean_score = cell.at("mean_score").get<double>();
        ds.n = cell.at("n").get<int>();
        row.cells.push_back(ds);
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace rmt
