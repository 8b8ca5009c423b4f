#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "rmt/jsonl.hpp"

namespace rmt {

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.7;
  int max_tokens = 2048;
  std::string model_id = "default";
};

struct ChatUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  ChatUsage usage;
  int latency_ms = 0;
};

enum class GatewayErrorKind { auth, timeout, replay_miss, bad_response, collision, config };

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  GatewayErrorKind kind() const { return kind_; }

 private:
  GatewayErrorKind kind_;
};

// Canonical serialization of a request; the hash is stable across runs and
// platforms (sorted keys, UTF-8, FNV-1a 64).
std::string canonical_request_json(const ChatRequest& req);
std::string request_hash(const ChatRequest& req);

// Chat-completion wire seam; fakes plug in here for tests and offline runs.
class ChatTransport {
 public:
  struct Result {
    bool transport_ok = false;
    int status = 0;
    std::string body;
    std::string error;
  };
  virtual ~ChatTransport() = default;
  virtual Result post_chat(const std::string& body_json) = 0;
};

// POSTs {endpoint}/chat/completions with a bearer token.
std::shared_ptr<ChatTransport> make_httplib_chat_transport(const std::string& endpoint,
                                                           const std::string& api_key,
                                                           int timeout_seconds = 60);

enum class GatewayMode { live, replay, scripted };

std::optional<GatewayMode> gateway_mode_from_string(std::string_view s);
std::string to_string(GatewayMode m);

struct GatewayConfig {
  GatewayMode mode = GatewayMode::replay;
  std::string endpoint;      // live; defaults from GATEWAY_ENDPOINT
  std::string api_key;       // live; defaults from GATEWAY_API_KEY
  std::string fixture_path;  // replay source / record target
  bool record = false;       // accumulate fixture entries (live/scripted)
  std::string audit_path;    // optional call log, JSONL
  int attempts = 3;
  int base_delay_ms = 200;
  double jitter = 0.1;
  std::uint64_t jitter_seed = 0;
};

struct FixtureEntry {
  std::string request_json;
  std::string text;
  ChatUsage usage;
};

using Fixture = std::map<std::string, FixtureEntry>;  // hash -> entry

Fixture load_fixture(const std::string& path);
void write_fixture(const Fixture& fixture, const std::string& path);

// Uniform chat-completion client: one wire shape, provider-agnostic, with
// deterministic replay for tests and offline runs.
class LlmGateway {
 public:
  explicit LlmGateway(GatewayConfig config,
                      std::shared_ptr<ChatTransport> transport = nullptr);

  ChatResponse complete(const ChatRequest& req);

  // Writes everything recorded so far; replaying it reproduces this
  // session byte-exactly.
  void save_fixture(const std::string& path) const;
  void save_fixture() const;  // to config.fixture_path

  std::size_t network_calls() const;
  int last_attempts() const;
  const GatewayConfig& config() const { return config_; }

 private:
  ChatResponse complete_via_transport(const ChatRequest& req, const std::string& hash);
  void append_audit(const std::string& hash, int attempts, bool ok, const std::string& error);

  GatewayConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  Fixture fixture_;
  mutable std::mutex mu_;
  std::size_t network_calls_ = 0;
  int last_attempts_ = 0;
};

}  // namespace rmt
