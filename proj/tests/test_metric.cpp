#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <optional>

#include <json.hpp>

#include "rmt/metric.hpp"
#include "rmt/rng.hpp"

using namespace rmt;

namespace {

class FakePoster : public HttpPoster {
 public:
  std::atomic<int> calls{0};
  int fail_first = 0;                 // transport failures before succeeding
  std::optional<int> force_status;    // fixed http status
  std::optional<std::string> body_override;

  Response post(const std::string&, const std::string& json_body) override {
    ++calls;
    if (fail_first > 0) {
      --fail_first;
      Response r;
      r.error = "connection refused";
      return r;
    }
    Response r;
    r.transport_ok = true;
    r.status = force_status.value_or(200);
    if (body_override) {
      r.body = *body_override;
      return r;
    }
    // Echo one score per item: 0.5 each.
    const auto req = nlohmann::json::parse(json_body);
    nlohmann::json scores = nlohmann::json::array();
    for (std::size_t i = 0; i < req.at("items").size(); ++i) scores.push_back(0.5);
    r.body = nlohmann::json{{"scores", scores}}.dump();
    return r;
  }
};

RetryPolicy fast_retry() {
  RetryPolicy r;
  r.base_delay_ms = 0;
  return r;
}

}  // namespace

TEST_CASE("lexical_quality: identity, disjoint, and hand-computed F1") {
  CHECK(lexical_quality("hello world", "hello world", "en") == 1.0);
  CHECK(lexical_quality("x y", "a b", "en") == -1.0);
  // hyp {a,b,c} vs ref {a,b,d}: overlap 2, F1 = 2/3, affine -> 1/3
  CHECK(lexical_quality("a b c", "a b d", "en") == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("lexical_quality: empty hypothesis is -1, empty reference is an error") {
  CHECK(lexical_quality("", "a b", "en") == -1.0);
  CHECK(lexical_quality("   ", "a b", "en") == -1.0);
  CHECK_THROWS_AS(lexical_quality("a", "  ", "en"), std::invalid_argument);
}

TEST_CASE("lexical_quality: multiset overlap does not over-credit repeats") {
  // hyp {a,a,a} vs ref {a,b}: overlap 1, F1 = 2/5, score = -0.2
  CHECK(lexical_quality("a a a", "a b", "en") == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("lexical_quality: symmetric, bounded, self-identity (property sweep)") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> vocab = {"a", "b", "c", "dd", "ee"};
  auto random_text = [&](std::size_t max_len) {
    const std::size_t len = 1 + bounded(rng, max_len);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) out += ' ';
      out += vocab[bounded(rng, vocab.size())];
    }
    return out;
  };
  for (int i = 0; i < 200; ++i) {
    const std::string h = random_text(6);
    const std::string r = random_text(6);
    const double s = lexical_quality(h, r, "en");
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    CHECK(s == lexical_quality(r, h, "en"));
    CHECK(lexical_quality(h, h, "en") == 1.0);
  }
}

TEST_CASE("lexical_quality uses the per-language tokenizer") {
  // Same bytes, different tokenization: as zh these are 2 chars vs 2 chars.
  CHECK(lexical_quality("你好", "好你", "zh") == 1.0);
  CHECK(lexical_quality("你好", "好你", "en") == -1.0);
}

TEST_CASE("LexicalMetric adapter honors lang hint and falls back to default") {
  const LexicalMetric metric("en");
  CHECK(metric.metric_id() == std::string(kLexicalMetricId));
  CHECK(metric.score("a b", "a b", "src ignored") == 1.0);
  CHECK(metric.score("你好", "好你", "", "zh") == 1.0);
}

TEST_CASE("remote metric: scores come back in request order") {
  auto poster = std::make_shared<FakePoster>();
  nlohmann::json scores = {0.1, 0.9};
  poster->body_override = nlohmann::json{{"scores", scores}}.dump();
  RemoteMetricClient client(poster, fast_retry());
  const auto out = client.score_batch({{"s1", "h1", "r1"}, {"s2", "h2", "r2"}});
  REQUIRE(out.size() == 2);
  CHECK(out[0].value == 0.1);
  CHECK(out[1].value == 0.9);
  CHECK(out[0].metric_id == "comet-remote-v1");
}

TEST_CASE("remote metric: cache serves identical requests without the wire") {
  auto poster = std::make_shared<FakePoster>();
  RemoteMetricClient client(poster, fast_retry());
  client.score_batch({{"s", "h", "r"}});
  CHECK(client.network_calls() == 1);
  const auto again = client.score_batch({{"s", "h", "r"}});
  CHECK(client.network_calls() == 1);  // second batch is all cache hits
  CHECK(again[0].value == 0.5);
}

TEST_CASE("remote metric: length mismatch is an error") {
  auto poster = std::make_shared<FakePoster>();
  poster->body_override = nlohmann::json{{"scores", {0.5}}}.dump();
  RemoteMetricClient client(poster, fast_retry());
  CHECK_THROWS_WITH_AS(client.score_batch({{"s1", "h1", "r1"}, {"s2", "h2", "r2"}}),
                       doctest::Contains("1 scores for 2 requests"), std::runtime_error);
}

TEST_CASE("remote metric: retries transient failures, then succeeds") {
  auto poster = std::make_shared<FakePoster>();
  poster->fail_first = 2;
  RemoteMetricClient client(poster, fast_retry());
  const auto out = client.score_batch({{"s", "h", "r"}});
  CHECK(out[0].value == 0.5);
  CHECK(poster->calls == 3);
}

TEST_CASE("remote metric: exhausted retries raise") {
  auto poster = std::make_shared<FakePoster>();
  poster->fail_first = 99;
  RemoteMetricClient client(poster, fast_retry());
  CHECK_THROWS_AS(client.score_batch({{"s", "h", "r"}}), std::runtime_error);
  CHECK(poster->calls == 3);
}

TEST_CASE("remote metric: empty batch and empty fields are invalid") {
  auto poster = std::make_shared<FakePoster>();
  RemoteMetricClient client(poster, fast_retry());
  CHECK_THROWS_AS(client.score_batch({}), std::invalid_argument);
  CHECK_THROWS_AS(client.score_batch({{"s", "", "r"}}), std::invalid_argument);
}
