#include "rmt/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "rmt/rng.hpp"

namespace rmt {

std::string canonical_request_json(const ChatRequest& req) {
  // nlohmann objects serialize with sorted keys, which pins the byte layout.
  return json{{"max_tokens", req.max_tokens},
              {"model", req.model_id},
              {"system", req.system},
              {"temperature", req.temperature},
              {"user", req.user}}
      .dump();
}

std::string request_hash(const ChatRequest& req) {
  return hex64(fnv1a64(canonical_request_json(req)));
}

std::optional<GatewayMode> gateway_mode_from_string(std::string_view s) {
  if (s == "live") return GatewayMode::live;
  if (s == "replay") return GatewayMode::replay;
  if (s == "scripted") return GatewayMode::scripted;
  return std::nullopt;
}

std::string to_string(GatewayMode m) {
  switch (m) {
    case GatewayMode::live: return "live";
    case GatewayMode::replay: return "replay";
    case GatewayMode::scripted: return "scripted";
  }
  return "replay";
}

namespace {

class HttplibChatTransport : public ChatTransport {
 public:
  HttplibChatTransport(std::string endpoint, std::string api_key, int timeout_seconds)
      : endpoint_(std::move(endpoint)),
        api_key_(std::move(api_key)),
        timeout_seconds_(timeout_seconds) {}

  Result post_chat(const std::string& body_json) override {
    httplib::Client client(endpoint_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post("/chat/completions", headers, body_json, "application/json");
    Result out;
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
  std::string api_key_;
  int timeout_seconds_;
};

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

std::shared_ptr<ChatTransport> make_httplib_chat_transport(const std::string& endpoint,
                                                           const std::string& api_key,
                                                           int timeout_seconds) {
  return std::make_shared<HttplibChatTransport>(endpoint, api_key, timeout_seconds);
}

Fixture load_fixture(const std::string& path) {
  Fixture fixture;
  for_each_jsonl(path, [&](std::size_t lineno, const json& j) {
    if (!j.contains("hash") || !j.contains("request") || !j.contains("response")) {
      throw LineError(path, lineno, "fixture entry needs hash/request/response");
    }
    FixtureEntry e;
    e.request_json = j.at("request").is_string() ? j.at("request").get<std::string>()
                                                 : j.at("request").dump();
    const auto& resp = j.at("response");
    e.text = resp.at("text").get<std::string>();
    if (resp.contains("usage")) {
      e.usage.prompt_tokens = resp["usage"].value("prompt_tokens", 0);
      e.usage.completion_tokens = resp["usage"].value("completion_tokens", 0);
    }
    fixture[j.at("hash").get<std::string>()] = std::move(e);
  });
  return fixture;
}

void write_fixture(const Fixture& fixture, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& [hash, e] : fixture) {
    json j{{"hash", hash},
           {"request", json::parse(e.request_json)},
           {"response",
            {{"text", e.text},
             {"usage",
              {{"prompt_tokens", e.usage.prompt_tokens},
               {"completion_tokens", e.usage.completion_tokens}}}}}};
    out << j.dump() << '\n';
  }
}

LlmGateway::LlmGateway(GatewayConfig config, std::shared_ptr<ChatTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.endpoint.empty()) config_.endpoint = env_or_empty("GATEWAY_ENDPOINT");
  if (config_.api_key.empty()) config_.api_key = env_or_empty("GATEWAY_API_KEY");

  if (config_.mode == GatewayMode::replay) {
    if (config_.fixture_path.empty()) {
      throw GatewayError(GatewayErrorKind::config, "replay mode needs a fixture path");
    }
    fixture_ = load_fixture(config_.fixture_path);
  } else if (config_.mode == GatewayMode::live) {
    if (!transport_) {
      if (config_.endpoint.empty()) {
        throw GatewayError(GatewayErrorKind::config,
                           "live mode needs an endpoint (flag, config, or GATEWAY_ENDPOINT)");
      }
      transport_ = make_httplib_chat_transport(config_.endpoint, config_.api_key);
    }
  }
  // Scripted mode gets its transport injected by the caller.
  if (config_.mode == GatewayMode::scripted && !transport_) {
    throw GatewayError(GatewayErrorKind::config, "scripted mode needs a transport");
  }
}

void LlmGateway::append_audit(const std::string& hash, int attempts, bool ok,
                              const std::string& error) {
  last_attempts_ = attempts;
  if (config_.audit_path.empty()) return;
  std::ofstream out(config_.audit_path, std::ios::app);
  if (!out) return;
  json j{{"hash", hash}, {"mode", to_string(config_.mode)}, {"attempts", attempts}, {"ok", ok}};
  if (!ok) j["error"] = error;
  out << j.dump() << '\n';
}

ChatResponse LlmGateway::complete(const ChatRequest& req) {
  if (req.user.empty()) {
    throw GatewayError(GatewayErrorKind::config, "chat request has empty user message");
  }
  const std::string hash = request_hash(req);

  if (config_.mode == GatewayMode::replay) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = fixture_.find(hash);
    if (it == fixture_.end()) {
      append_audit(hash, 0, false, "replay miss");
      throw GatewayError(GatewayErrorKind::replay_miss,
                         "replay miss: no fixture entry for request hash " + hash);
    }
    append_audit(hash, 0, true, "");
    ChatResponse resp;
    resp.text = it->second.text;
    resp.usage = it->second.usage;
    resp.latency_ms = 0;
    return resp;
  }

  ChatResponse resp = complete_via_transport(req, hash);

  if (config_.record) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = fixture_.find(hash);
    const std::string canonical = canonical_request_json(req);
    if (it != fixture_.end() && it->second.request_json != canonical) {
      throw GatewayError(GatewayErrorKind::collision,
                         "distinct requests collide on hash " + hash);
    }
    fixture_[hash] = FixtureEntry{canonical, resp.text, resp.usage};
  }
  return resp;
}

ChatResponse LlmGateway::complete_via_transport(const ChatRequest& req, const std::string& hash) {
  json messages = json::array();
  if (!req.system.empty()) {
    messages.push_back({{"role", "system"}, {"content", req.system}});
  }
  messages.push_back({{"role", "user"}, {"content", req.user}});
  const std::string body = json{{"model", req.model_id},
                                {"messages", messages},
                                {"temperature", req.temperature},
                                {"max_tokens", req.max_tokens}}
                               .dump();

  std::mt19937_64 jitter_rng(derive_seed(config_.jitter_seed, fnv1a64(hash)));
  std::string last_error;
  const auto started = std::chrono::steady_clock::now();

  for (int attempt = 1; attempt <= config_.attempts; ++attempt) {
    ChatTransport::Result res;
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++network_calls_;
    }
    res = transport_->post_chat(body);

    if (res.transport_ok && (res.status == 401 || res.status == 403)) {
      std::lock_guard<std::mutex> lock(mu_);
      append_audit(hash, attempt, false, "auth failure");
      throw GatewayError(GatewayErrorKind::auth,
                         "authentication failed (status " + std::to_string(res.status) + ")");
    }

    if (res.transport_ok && res.status == 200) {
      json parsed = json::parse(res.body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
          !parsed["choices"][0].contains("message")) {
        std::lock_guard<std::mutex> lock(mu_);
        append_audit(hash, attempt, false, "bad response body");
        throw GatewayError(GatewayErrorKind::bad_response,
                           "completion response missing choices[0].message");
      }
      ChatResponse resp;
      resp.text = parsed["choices"][0]["message"].value("content", "");
      if (parsed.contains("usage")) {
        resp.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
        resp.usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
      }
      resp.latency_ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                             std::chrono::steady_clock::now() - started)
                                             .count());
      std::lock_guard<std::mutex> lock(mu_);
      append_audit(hash, attempt, true, "");
      return resp;
    }

    last_error = res.transport_ok ? ("http status " + std::to_string(res.status)) : res.error;
    if (attempt < config_.attempts && config_.base_delay_ms > 0) {
      const double scale = 1.0 + config_.jitter * uniform01(jitter_rng);
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<int>(static_cast<double>(config_.base_delay_ms) *
                           static_cast<double>(1 << (attempt - 1)) * scale)));
    }
  }

  std::lock_guard<std::mutex> lock(mu_);
  append_audit(hash, config_.attempts, false, last_error);
  throw GatewayError(GatewayErrorKind::timeout,
                     "gateway unreachable after " + std::to_string(config_.attempts) +
                         " attempts: " + last_error);
}

void LlmGateway::save_fixture(const std::string& path) const {
  std::lock_guard<std::mutex> lock(mu_);
  write_fixture(fixture_, path);
}

void LlmGateway::save_fixture() const {
  if (config_.fixture_path.empty()) {
    throw GatewayError(GatewayErrorKind::config, "no fixture path configured");
  }
  save_fixture(config_.fixture_path);
}

std::size_t LlmGateway::network_calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return network_calls_;
}

int LlmGateway::last_attempts() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_attempts_;
}

}  // namespace rmt
