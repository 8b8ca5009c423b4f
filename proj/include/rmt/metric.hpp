#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace rmt {

struct QualityScore {
  double value = 0.0;
  std::string metric_id;
  std::string hyp_id;
};

struct MetricRequest {
  std::string source;
  std::string hypothesis;
  std::string reference;
};

// Pluggable translation-quality backend. `lang` is a tokenizer hint that
// lexical scoring uses and neural backends ignore.
class QualityMetric {
 public:
  virtual ~QualityMetric() = default;
  virtual double score(const std::string& hypothesis, const std::string& reference,
                       const std::string& source, const std::string& lang = "") const = 0;
  virtual std::string metric_id() const = 0;
};

// Token-multiset F1 mapped affinely onto [-1, 1], so the zero-clamp branch
// of the answer reward is reachable. Desk-scale stand-in for a neural metric.
double lexical_quality(const std::string& hyp, const std::string& ref, const std::string& lang);

inline constexpr const char* kLexicalMetricId = "tokenF1-affine-v1";

class LexicalMetric : public QualityMetric {
 public:
  explicit LexicalMetric(std::string default_lang = "en")
      : default_lang_(std::move(default_lang)) {}
  double score(const std::string& hyp, const std::string& ref, const std::string& source,
               const std::string& lang = "") const override {
    (void)source;
    return lexical_quality(hyp, ref, lang.empty() ? default_lang_ : lang);
  }
  std::string metric_id() const override { return kLexicalMetricId; }

 private:
  std::string default_lang_;
};

// Transport seam so the wire can be faked in tests.
class HttpPoster {
 public:
  struct Response {
    bool transport_ok = false;
    int status = 0;
    std::string body;
    std::string error;
  };
  virtual ~HttpPoster() = default;
  virtual Response post(const std::string& path, const std::string& json_body) = 0;
};

std::shared_ptr<HttpPoster> make_httplib_poster(const std::string& endpoint,
                                                int timeout_seconds = 30);

struct RetryPolicy {
  int attempts = 3;
  int base_delay_ms = 100;
  double jitter = 0.1;
  std::uint64_t jitter_seed = 0;
};

// Client for the scoring service: POST /score with
// {"items":[{"src","mt","ref"}]} returning {"scores":[...]}. Responses are
// cached by request content hash.
class RemoteMetricClient {
 public:
  RemoteMetricClient(std::shared_ptr<HttpPoster> poster, RetryPolicy retry = {},
                     std::string metric_id = "comet-remote-v1");

  std::vector<QualityScore> score_batch(const std::vector<MetricRequest>& batch) const;
  std::size_t network_calls() const;
  std::string metric_id() const { return metric_id_; }

 private:
  std::shared_ptr<HttpPoster> poster_;
  RetryPolicy retry_;
  std::string metric_id_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::uint64_t, double> cache_;
  mutable std::size_t network_calls_ = 0;
};

class RemoteMetric : public QualityMetric {
 public:
  explicit RemoteMetric(std::shared_ptr<RemoteMetricClient> client)
      : client_(std::move(client)) {}
  double score(const std::string& hyp, const std::string& ref, const std::string& source,
               const std::string& lang = "") const override {
    (void)lang;
    return client_->score_batch({MetricRequest{source, hyp, ref}}).front().value;
  }
  std::string metric_id() const override { return client_->metric_id(); }

 private:
  std::shared_ptr<RemoteMetricClient> client_;
};

}  // namespace rmt
