#include "rmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "rmt/rng.hpp"
#include "rmt/tokenize.hpp"

namespace rmt {

std::string to_string(Domain d) {
  switch (d) {
    case Domain::news: return "news";
    case Domain::literature: return "literature";
    case Domain::specialized: return "specialized";
    case Domain::synthetic: return "synthetic";
    case Domain::other: return "other";
  }
  return "other";
}

std::optional<Domain> domain_from_string(std::string_view s) {
  if (s == "news") return Domain::news;
  if (s == "literature") return Domain::literature;
  if (s == "specialized") return Domain::specialized;
  if (s == "synthetic") return Domain::synthetic;
  if (s == "other") return Domain::other;
  return std::nullopt;
}

Ratio Ratio::parse(const std::string& text) {
  Ratio r;
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    r.num = std::stoull(text.substr(0, slash));
    r.den = std::stoull(text.substr(slash + 1));
  } else {
    auto dot = text.find('.');
    if (dot == std::string::npos) {
      r.num = std::stoull(text);
      r.den = 1;
    } else {
      const std::string frac = text.substr(dot + 1);
      const std::string whole = text.substr(0, dot);
      if (frac.size() > 18) throw std::invalid_argument("ratio has too many decimals: " + text);
      std::uint64_t den = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
      const std::uint64_t w = whole.empty() ? 0 : std::stoull(whole);
      const std::uint64_t f = frac.empty() ? 0 : std::stoull(frac);
      r.num = w * den + f;
      r.den = den;
    }
  }
  if (r.den == 0) throw std::invalid_argument("ratio denominator is zero: " + text);
  const std::uint64_t g = std::gcd(r.num, r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  return r;
}

namespace {

std::string require_string(const json& j, const char* key, const std::string& name,
                           std::size_t lineno) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw LineError(name, lineno, std::string("missing or non-string field \"") + key + "\"");
  }
  return j.at(key).get<std::string>();
}

ParallelPair make_pair_checked(std::string id, std::string src, std::string tgt,
                               std::string src_lang, std::string tgt_lang,
                               std::string domain, const std::string& name,
                               std::size_t lineno) {
  ParallelPair p;
  p.id = std::move(id);
  p.source_text = std::move(src);
  p.target_text = std::move(tgt);
  p.source_lang = std::move(src_lang);
  p.target_lang = std::move(tgt_lang);
  if (trim_copy(p.id).empty()) throw LineError(name, lineno, "empty id");
  if (trim_copy(p.source_text).empty()) throw LineError(name, lineno, "empty src text");
  if (trim_copy(p.target_text).empty()) throw LineError(name, lineno, "empty tgt text");
  if (!valid_lang_code(p.source_lang)) {
    throw LineError(name, lineno, "unknown language code \"" + p.source_lang + "\"");
  }
  if (!valid_lang_code(p.target_lang)) {
    throw LineError(name, lineno, "unknown language code \"" + p.target_lang + "\"");
  }
  if (p.source_lang == p.target_lang) {
    throw LineError(name, lineno, "source and target language are both \"" + p.source_lang + "\"");
  }
  auto d = domain_from_string(domain);
  if (!d) throw LineError(name, lineno, "unknown domain \"" + domain + "\"");
  p.domain = *d;
  p.source_token_count = token_count(p.source_text, p.source_lang);
  return p;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> default_directions() {
  std::vector<std::pair<std::string, std::string>> dirs;
  for (const char* l : {"zh", "ja", "ru", "fr", "de"}) {
    dirs.push_back({"en", l});
    dirs.push_back({l, "en"});
  }
  for (const char* l : {"ja", "ru", "fr", "de"}) {
    dirs.push_back({"zh", l});
    dirs.push_back({l, "zh"});
  }
  return dirs;
}

json pair_to_json(const ParallelPair& p) {
  return json{{"id", p.id},
              {"src", p.source_text},
              {"tgt", p.target_text},
              {"src_lang", p.source_lang},
              {"tgt_lang", p.target_lang},
              {"domain", to_string(p.domain)}};
}

ParallelPair pair_from_json(const json& j, const std::string& name, std::size_t lineno) {
  return make_pair_checked(require_string(j, "id", name, lineno),
                           require_string(j, "src", name, lineno),
                           require_string(j, "tgt", name, lineno),
                           require_string(j, "src_lang", name, lineno),
                           require_string(j, "tgt_lang", name, lineno),
                           require_string(j, "domain", name, lineno), name, lineno);
}

CorpusSet load_corpus_stream(std::istream& in, const std::string& name, CorpusFormat format) {
  CorpusSet c;
  c.provenance = name;
  std::unordered_set<std::string> seen_ids;
  auto add = [&](ParallelPair p, std::size_t lineno) {
    if (!seen_ids.insert(p.id).second) {
      throw LineError(name, lineno, "duplicate id \"" + p.id + "\"");
    }
    c.pairs.push_back(std::move(p));
  };

  if (format == CorpusFormat::jsonl) {
    for_each_jsonl_stream(in, name, [&](std::size_t lineno, const json& j) {
      add(pair_from_json(j, name, lineno), lineno);
    });
  } else {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim_copy(line).empty()) continue;
      std::vector<std::string> cols;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
          cols.push_back(line.substr(start, i - start));
          start = i + 1;
        }
      }
      if (cols.size() != 6) {
        throw LineError(name, lineno,
                        "expected 6 tab-separated columns, got " + std::to_string(cols.size()));
      }
      add(make_pair_checked(cols[0], cols[1], cols[2], cols[3], cols[4], cols[5], name, lineno),
          lineno);
    }
  }
  return c;
}

CorpusSet load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_corpus_stream(in, path, format);
}

void save_corpus_jsonl(const CorpusSet& c, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& p : c.pairs) out << pair_to_json(p).dump() << '\n';
}

CorpusSet filter_by_length(const CorpusSet& c, std::size_t min_tokens, std::size_t max_tokens) {
  if (min_tokens > max_tokens) {
    throw std::invalid_argument("filter_by_length: min_tokens > max_tokens");
  }
  CorpusSet out;
  out.provenance = c.provenance;
  for (const auto& p : c.pairs) {
    if (p.source_token_count >= min_tokens && p.source_token_count <= max_tokens) {
      out.pairs.push_back(p);
    }
  }
  return out;
}

namespace {

// Direction keys in first-appearance order, with member indices.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_direction(
    const CorpusSet& c) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    const std::string key = c.pairs[i].direction();
    auto it = index_of.find(key);
    if (it == index_of.end()) {
      index_of.emplace(key, groups.size());
      groups.push_back({key, {i}});
    } else {
      groups[it->second].second.push_back(i);
    }
  }
  return groups;
}

// First k of a seeded shuffle, returned in original order.
std::vector<std::size_t> pick_k(const std::vector<std::size_t>& indices, std::size_t k,
                                std::uint64_t seed) {
  std::vector<std::size_t> pool = indices;
  std::mt19937_64 rng(seed);
  shuffle_stable(pool, rng);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

CorpusSet sample_balanced(const CorpusSet& c, std::size_t per_direction, std::uint64_t seed) {
  CorpusSet out;
  out.provenance = c.provenance;
  if (per_direction == 0) return out;
  const auto groups = group_by_direction(c);
  std::vector<std::size_t> chosen;
  for (const auto& [key, indices] : groups) {
    if (indices.size() < per_direction) {
      throw std::runtime_error("sample_balanced: direction " + key + " has only " +
                               std::to_string(indices.size()) + " pairs, short by " +
                               std::to_string(per_direction - indices.size()));
    }
    auto picked = pick_k(indices, per_direction, derive_seed(seed, fnv1a64(key)));
    chosen.insert(chosen.end(), picked.begin(), picked.end());
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i : chosen) out.pairs.push_back(c.pairs[i]);
  return out;
}

std::pair<CorpusSet, CorpusSet> split_train_val(const CorpusSet& c, Ratio train_ratio,
                                                std::uint64_t seed) {
  if (!train_ratio.proper()) {
    throw std::invalid_argument("split_train_val: train_ratio must be in (0, 1)");
  }
  std::vector<bool> in_train(c.pairs.size(), false);
  for (const auto& [key, indices] : group_by_direction(c)) {
    // Exact per-direction floor: |train_d| = floor(ratio * |d|).
    const std::size_t n_train =
        static_cast<std::size_t>((static_cast<std::uint64_t>(indices.size()) * train_ratio.num) /
                                 train_ratio.den);
    for (std::size_t i : pick_k(indices, n_train, derive_seed(seed, fnv1a64(key), 1))) {
      in_train[i] = true;
    }
  }
  CorpusSet train;
  CorpusSet val;
  train.provenance = c.provenance;
  val.provenance = c.provenance;
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    (in_train[i] ? train : val).pairs.push_back(c.pairs[i]);
  }
  return {std::move(train), std::move(val)};
}

std::vector<std::size_t> default_bucket_edges() {
  return {0, 10, 50, 100, 200, 400, 800, 1200};
}

std::string LengthHistogram::bucket_label(std::size_t i) const {
  const std::size_t k = bucket_edges.size();
  if (i + 1 < k - 1) {
    return "[" + std::to_string(bucket_edges[i]) + "," + std::to_string(bucket_edges[i + 1]) + ")";
  }
  if (i + 1 == k - 1) {
    return "[" + std::to_string(bucket_edges[i]) + "," + std::to_string(bucket_edges[i + 1]) + "]";
  }
  return "(" + std::to_string(bucket_edges.back()) + ",inf)";
}

LengthHistogram token_stats(const CorpusSet& c, std::vector<std::size_t> bucket_edges) {
  if (bucket_edges.size() < 2) {
    throw std::invalid_argument("token_stats: need at least two bucket edges");
  }
  if (bucket_edges.front() != 0) {
    throw std::invalid_argument("token_stats: first bucket edge must be 0");
  }
  for (std::size_t i = 1; i < bucket_edges.size(); ++i) {
    if (bucket_edges[i] <= bucket_edges[i - 1]) {
      throw std::invalid_argument("token_stats: bucket edges must be strictly increasing");
    }
  }

  LengthHistogram h;
  h.bucket_edges = std::move(bucket_edges);
  h.counts.assign(h.bucket_edges.size(), 0);  // bounded buckets + overflow

  std::vector<std::size_t> lengths;
  lengths.reserve(c.pairs.size());
  for (const auto& p : c.pairs) lengths.push_back(p.source_token_count);

  for (std::size_t v : lengths) {
    if (v > h.bucket_edges.back()) {
      ++h.counts.back();
      continue;
    }
    // Largest edge <= v; the bucket ending at the last finite edge is
    // closed on the right, so v == last edge lands there.
    std::size_t i = 0;
    while (i + 1 < h.bucket_edges.size() && h.bucket_edges[i + 1] <= v) ++i;
    if (i == h.bucket_edges.size() - 1) i -= 1;
    ++h.counts[i];
  }

  if (!lengths.empty()) {
    h.has_values = true;
    std::sort(lengths.begin(), lengths.end());
    h.min_tokens = lengths.front();
    h.max_tokens = lengths.back();
    double sum = 0;
    for (std::size_t v : lengths) sum += static_cast<double>(v);
    h.mean_tokens = sum / static_cast<double>(lengths.size());
    const std::size_t n = lengths.size();
    h.median_tokens = (n % 2 == 1)
                          ? static_cast<double>(lengths[n / 2])
                          : (static_cast<double>(lengths[n / 2 - 1]) +
                             static_cast<double>(lengths[n / 2])) /
                                2.0;
  }
  return h;
}

namespace {

std::set<std::string> lang_side_vocab(const CorpusSet& c, const std::string& lang,
                                      std::size_t* segments) {
  std::set<std::string> vocab;
  *segments = 0;
  for (const auto& p : c.pairs) {
    const std::string* text = nullptr;
    if (p.source_lang == lang) text = &p.source_text;
    else if (p.target_lang == lang) text = &p.target_text;
    if (!text) continue;
    ++*segments;
    for (auto& t : tokenize(*text, lang)) vocab.insert(std::move(t));
  }
  return vocab;
}

}  // namespace

double similarity(const CorpusSet& test, const CorpusSet& train, const std::string& lang) {
  std::size_t test_segments = 0;
  std::size_t train_segments = 0;
  const auto test_vocab = lang_side_vocab(test, lang, &test_segments);
  const auto train_vocab = lang_side_vocab(train, lang, &train_segments);
  if (test_segments == 0 || train_segments == 0) {
    throw std::runtime_error("similarity: no segments in language \"" + lang + "\"");
  }
  std::size_t inter = 0;
  for (const auto& t : test_vocab) {
    if (train_vocab.count(t)) ++inter;
  }
  const std::size_t uni = test_vocab.size() + train_vocab.size() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

SimilarityReport similarity_report(const CorpusSet& test, const CorpusSet& train,
                                   const std::vector<std::string>& langs) {
  SimilarityReport r;
  r.test_name = test.provenance;
  r.train_name = train.provenance;
  r.metric_id = kSimilarityMetricId;
  for (const auto& lang : langs) r.scores[lang] = similarity(test, train, lang);
  return r;
}

json histogram_to_json(const LengthHistogram& h) {
  json buckets = json::array();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    buckets.push_back({{"bucket", h.bucket_label(i)}, {"count", h.counts[i]}});
  }
  json j{{"buckets", buckets}, {"edges", h.bucket_edges}, {"has_values", h.has_values}};
  if (h.has_values) {
    j["min"] = h.min_tokens;
    j["max"] = h.max_tokens;
    j["mean"] = h.mean_tokens;
    j["median"] = h.median_tokens;
  }
  return j;
}

json similarity_report_to_json(const SimilarityReport& r) {
  return json{{"test", r.test_name},
              {"train", r.train_name},
              {"metric_id", r.metric_id},
              {"scores", r.scores}};
}

}  // namespace rmt
