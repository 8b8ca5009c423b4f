#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rmt/jsonl.hpp"

namespace rmt {

enum class Domain { news, literature, specialized, synthetic, other };

std::string to_string(Domain d);
std::optional<Domain> domain_from_string(std::string_view s);

// One source/target segment pair with its translation direction.
struct ParallelPair {
  std::string id;
  std::string source_text;
  std::string target_text;
  std::string source_lang;
  std::string target_lang;
  Domain domain = Domain::other;
  std::size_t source_token_count = 0;

  std::string direction() const { return source_lang + "-" + target_lang; }
};

struct CorpusSet {
  std::vector<ParallelPair> pairs;
  std::string provenance;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

// Bucketed view of source token lengths. Buckets are [e_i, e_{i+1}) except
// the one ending at the last finite edge, which is closed, plus a final
// overflow bucket above that edge.
struct LengthHistogram {
  std::vector<std::size_t> bucket_edges;  // finite edges, first must be 0
  std::vector<std::size_t> counts;        // edges.size()-1 bounded buckets + overflow
  bool has_values = false;                // false for an empty corpus
  std::size_t min_tokens = 0;
  std::size_t max_tokens = 0;
  double mean_tokens = 0.0;
  double median_tokens = 0.0;

  std::string bucket_label(std::size_t i) const;
};

struct SimilarityReport {
  std::map<std::string, double> scores;  // lang -> [0, 1]
  std::string test_name;
  std::string train_name;
  std::string metric_id;  // "jaccard-unigram-v1"
};

// Exact train fraction. Parsed from decimal strings so 9:1 of 2000 is
// exactly 1800 regardless of binary rounding.
struct Ratio {
  std::uint64_t num = 9;
  std::uint64_t den = 10;

  static Ratio parse(const std::string& text);  // "0.9", "9/10"
  bool proper() const { return num > 0 && num < den; }
};

enum class CorpusFormat { jsonl, tsv };

inline constexpr const char* kSimilarityMetricId = "jaccard-unigram-v1";

// Default direction set: the 18 unique English- and Chinese-centric
// ordered directions over {en, zh, ja, ru, fr, de}.
std::vector<std::pair<std::string, std::string>> default_directions();

CorpusSet load_corpus(const std::string& path, CorpusFormat format);
CorpusSet load_corpus_stream(std::istream& in, const std::string& name, CorpusFormat format);

void save_corpus_jsonl(const CorpusSet& c, const std::string& path);

CorpusSet filter_by_length(const CorpusSet& c, std::size_t min_tokens = 10,
                           std::size_t max_tokens = 1200);

CorpusSet sample_balanced(const CorpusSet& c, std::size_t per_direction,
                          std::uint64_t seed);

std::pair<CorpusSet, CorpusSet> split_train_val(const CorpusSet& c, Ratio train_ratio,
                                                std::uint64_t seed);

std::vector<std::size_t> default_bucket_edges();

LengthHistogram token_stats(const CorpusSet& c,
                            std::vector<std::size_t> bucket_edges = default_bucket_edges());

// Jaccard index over unigram token-type sets of all lang-side text.
double similarity(const CorpusSet& test, const CorpusSet& train, const std::string& lang);

SimilarityReport similarity_report(const CorpusSet& test, const CorpusSet& train,
                                   const std::vector<std::string>& langs);

json pair_to_json(const ParallelPair& p);
ParallelPair pair_from_json(const json& j, const std::string& name, std::size_t lineno);

json histogram_to_json(const LengthHistogram& h);
json similarity_report_to_json(const SimilarityReport& r);

}  // namespace rmt
