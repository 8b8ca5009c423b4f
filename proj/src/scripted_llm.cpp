#include "rmt/scripted_llm.hpp"

#include <algorithm>
#include <sstream>

#include "rmt/cot_templates.hpp"
#include "rmt/rng.hpp"
#include "rmt/tokenize.hpp"

namespace rmt {

namespace {

std::string between(const std::string& text, const std::string& open, const std::string& close) {
  const auto a = text.find(open);
  if (a == std::string::npos) return "";
  const auto b = text.find(close, a + open.size());
  if (b == std::string::npos) return "";
  return trim_copy(text.substr(a + open.size(), b - a - open.size()));
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Whitespace-token view; good enough for the synthetic corpora this fake
// serves.
std::vector<std::string> words(const std::string& text) { return tokenize(text, "en"); }

std::string corrupt(const std::string& reference, std::uint64_t h) {
  auto tokens = words(reference);
  if (tokens.empty()) return reference;
  std::size_t k = h % 3;
  k = std::min(k, tokens.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pos = (h >> (8 * (i + 1))) % tokens.size();
    tokens[pos] = "unk" + std::to_string((h >> (4 * i)) % 100);
  }
  return join(tokens);
}

// One corrupted token restored per call; identical once they agree.
std::string improve(const std::string& prior, const std::string& reference) {
  const auto ref = words(reference);
  auto cur = words(prior);
  if (cur.size() != ref.size()) return reference;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (cur[i] != ref[i]) {
      cur[i] = ref[i];
      return join(cur);
    }
  }
  return join(cur);
}

class ScriptedTransport : public ChatTransport {
 public:
  Result post_chat(const std::string& body_json) override {
    Result out;
    json body = json::parse(body_json, nullptr, false);
    if (body.is_discarded()) {
      out.transport_ok = true;
      out.status = 400;
      out.body = "bad request";
      return out;
    }
    std::string system;
    std::string user;
    for (const auto& m : body.value("messages", json::array())) {
      const std::string role = m.value("role", "");
      if (role == "system") system = m.value("content", "");
      if (role == "user") user = m.value("content", "");
    }
    const std::string text = respond(system, user);
    json resp{{"choices", json::array({json{{"message", {{"role", "assistant"},
                                                          {"content", text}}}}})},
              {"usage",
               {{"prompt_tokens", static_cast<int>((system.size() + user.size()) / 4)},
                {"completion_tokens", static_cast<int>(text.size() / 4)}}}};
    out.transport_ok = true;
    out.status = 200;
    out.body = resp.dump();
    return out;
  }

 private:
  static std::string respond(const std::string& system, const std::string& user) {
    const std::uint64_t h = fnv1a64(system) ^ (fnv1a64(user) * 0x9e3779b97f4a7c15ULL + 1);

    if (user.find("<Translation Process>") != std::string::npos) {
      const std::string prior = between(user, "<result>", "</result>");
      const std::string reference = between(user, "<reference>", "</reference>");
      const std::string improved = improve(prior, reference);
      return "<think>The earlier draft deviates from the intended wording; adjusting the "
             "mismatched token and rechecking agreement.</think>\n<answer>" +
             improved + "</answer>";
    }

    if (user.find("<template>") != std::string::npos) {
      const std::string reference = between(user, "<reference>", "</reference>");
      const std::string source = between(user, "<source>", "</source>");
      const auto source_tokens = words(source);
      std::string think =
          "Working through the template for this pair. Core elements: " +
          join({source_tokens.begin(),
                source_tokens.begin() + std::min<std::size_t>(source_tokens.size(), 3)}) +
          ". Producing the target text step by step.";
      return "<think>" + think + "</think>\n<answer>" + corrupt(reference, h) + "</answer>";
    }

    if (system.find("From the six available") != std::string::npos) {
      static const char* letters = "abcdef";
      const int idx = static_cast<int>(h % kStrategyCount);
      return std::string("Selected strategy: ") + letters[idx] + ". " +
             strategy_display_name(static_cast<Strategy>(idx));
    }

    if (user.find("<translation task>") != std::string::npos) {
      const std::string task = between(user, "<translation task>", "</translation task>");
      auto tokens = words(task);
      std::stable_sort(tokens.begin(), tokens.end(),
                       [](const std::string& a, const std::string& b) {
                         return a.size() > b.size();
                       });
      std::ostringstream concepts;
      const std::size_t n = std::min<std::size_t>(tokens.size(), 3);
      for (std::size_t i = 0; i < n; ++i) concepts << tokens[i] << '\n';
      return concepts.str();
    }

    return "ack " + hex64(h);
  }
};

}  // namespace

std::shared_ptr<ChatTransport> make_scripted_transport() {
  return std::make_shared<ScriptedTransport>();
}

}  // namespace rmt
