#include "rmt/metric.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rmt/rng.hpp"
#include "rmt/tokenize.hpp"

namespace rmt {

using json = nlohmann::json;

double lexical_quality(const std::string& hyp, const std::string& ref, const std::string& lang) {
  const auto ref_tokens = tokenize(ref, lang);
  if (ref_tokens.empty()) {
    throw std::invalid_argument("lexical_quality: reference has no tokens");
  }
  const auto hyp_tokens = tokenize(hyp, lang);
  if (hyp_tokens.empty()) return -1.0;

  std::map<std::string, std::size_t> ref_counts;
  for (const auto& t : ref_tokens) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : hyp_tokens) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  const double f1 = 2.0 * static_cast<double>(overlap) /
                    static_cast<double>(hyp_tokens.size() + ref_tokens.size());
  return 2.0 * f1 - 1.0;
}

namespace {

class HttplibPoster : public HttpPoster {
 public:
  HttplibPoster(std::string endpoint, int timeout_seconds)
      : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

  Response post(const std::string& path, const std::string& json_body) override {
    httplib::Client client(endpoint_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    auto res = client.Post(path, json_body, "application/json");
    Response out;
    if (!res) {
      out.error = "transport failure: " + httplib::to_string(res.error());
      return out;
    }
    out.transport_ok = true;
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  std::string endpoint_;
  int timeout_seconds_;
};

std::uint64_t request_content_hash(const MetricRequest& r) {
  const json j{{"src", r.source}, {"mt", r.hypothesis}, {"ref", r.reference}};
  return fnv1a64(j.dump());
}

}  // namespace

std::shared_ptr<HttpPoster> make_httplib_poster(const std::string& endpoint, int timeout_seconds) {
  return std::make_shared<HttplibPoster>(endpoint, timeout_seconds);
}

RemoteMetricClient::RemoteMetricClient(std::shared_ptr<HttpPoster> poster, RetryPolicy retry,
                                       std::string metric_id)
    : poster_(std::move(poster)), retry_(retry), metric_id_(std::move(metric_id)) {
  if (!poster_) throw std::invalid_argument("RemoteMetricClient: no transport configured");
}

std::vector<QualityScore> RemoteMetricClient::score_batch(
    const std::vector<MetricRequest>& batch) const {
  if (batch.empty()) throw std::invalid_argument("score_batch: empty batch");
  for (const auto& r : batch) {
    if (r.hypothesis.empty() || r.reference.empty()) {
      throw std::invalid_argument("score_batch: hypothesis and reference must be nonempty");
    }
  }

  std::vector<std::uint64_t> hashes(batch.size());
  std::vector<double> values(batch.size());
  std::vector<std::size_t> misses;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      hashes[i] = request_content_hash(batch[i]);
      auto it = cache_.find(hashes[i]);
      if (it != cache_.end()) {
        values[i] = it->second;
      } else if (std::none_of(misses.begin(), misses.end(),
                              [&](std::size_t m) { return hashes[m] == hashes[i]; })) {
        misses.push_back(i);
      }
    }
  }

  if (!misses.empty()) {
    json items = json::array();
    for (std::size_t i : misses) {
      items.push_back({{"src", batch[i].source},
                       {"mt", batch[i].hypothesis},
                       {"ref", batch[i].reference}});
    }
    const std::string body = json{{"items", items}}.dump();

    std::mt19937_64 jitter_rng(retry_.jitter_seed);
    HttpPoster::Response resp;
    std::string last_error;
    bool ok = false;
    for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
      {
        std::lock_guard<std::mutex> lock(mu_);
        ++network_calls_;
      }
      resp = poster_->post("/score", body);
      if (resp.transport_ok && resp.status == 200) {
        ok = true;
        break;
      }
      last_error = resp.transport_ok ? ("http status " + std::to_string(resp.status)) : resp.error;
      if (attempt < retry_.attempts && retry_.base_delay_ms > 0) {
        const double scale = 1.0 + retry_.jitter * uniform01(jitter_rng);
        const auto delay = std::chrono::milliseconds(static_cast<int>(
            static_cast<double>(retry_.base_delay_ms) * static_cast<double>(1 << (attempt - 1)) *
            scale));
        std::this_thread::sleep_for(delay);
      }
    }
    if (!ok) {
      throw std::runtime_error("metric service unreachable after " +
                               std::to_string(retry_.attempts) + " attempts: " + last_error);
    }

    json parsed = json::parse(resp.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("scores") || !parsed["scores"].is_array()) {
      throw std::runtime_error("metric service returned malformed body");
    }
    const auto& scores = parsed["scores"];
    if (scores.size() != misses.size()) {
      throw std::runtime_error("metric service returned " + std::to_string(scores.size()) +
                               " scores for " + std::to_string(misses.size()) + " requests");
    }
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t k = 0; k < misses.size(); ++k) {
      cache_[hashes[misses[k]]] = scores[k].get<double>();
    }
  }

  std::vector<QualityScore> out(batch.size());
  std::lock_guard<std::mutex> lock(mu_);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i].value = cache_.at(hashes[i]);
    out[i].metric_id = metric_id_;
    out[i].hyp_id = hex64(hashes[i]);
  }
  return out;
}

std::size_t RemoteMetricClient::network_calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return network_calls_;
}

}  // namespace rmt
