#pragma once

#include <map>
#include <optional>
#include <string>

namespace rmt {

// Layered key=value configuration: file < environment < flags. Keys are
// dotted ("gateway.endpoint"); [section] headers in the file prefix the
// keys that follow; '#' starts a comment. Environment overrides use the
// RMT_ prefix with "__" as the section separator, e.g.
// RMT_GATEWAY__ENDPOINT -> gateway.endpoint.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);

  void overlay_env(const std::string& prefix = "RMT_");

  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;

  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int_or(const std::string& key, int fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace rmt
