#include "rmt/tokenize.hpp"

#include <array>
#include <cctype>
#include <map>

namespace rmt {

namespace {

bool ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length of the UTF-8 sequence starting at the given lead byte; 1 for
// malformed input so we always make progress.
std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

}  // namespace

bool char_tokenized_lang(std::string_view lang) {
  return lang == "zh" || lang == "ja" || lang == "th";
}

std::vector<std::string> tokenize(std::string_view text, std::string_view lang) {
  std::vector<std::string> out;
  if (char_tokenized_lang(lang)) {
    std::size_t i = 0;
    while (i < text.size()) {
      const unsigned char c = static_cast<unsigned char>(text[i]);
      if (ascii_space(c)) {
        ++i;
        continue;
      }
      std::size_t n = utf8_len(c);
      if (i + n > text.size()) n = 1;
      // U+3000 ideographic space is whitespace too.
      if (n == 3 && text.substr(i, 3) == "\xe3\x80\x80") {
        i += 3;
        continue;
      }
      out.emplace_back(text.substr(i, n));
      i += n;
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && ascii_space(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t start = i;
      while (i < text.size() && !ascii_space(static_cast<unsigned char>(text[i]))) ++i;
      if (i > start) out.emplace_back(text.substr(start, i - start));
    }
  }
  return out;
}

std::size_t token_count(std::string_view text, std::string_view lang) {
  return tokenize(text, lang).size();
}

bool valid_lang_code(std::string_view lang) {
  if (lang.size() != 2) return false;
  for (char c : lang) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

std::string lang_display_name(std::string_view lang) {
  static const std::map<std::string_view, std::string_view> kNames = {
      {"en", "English"},  {"zh", "Chinese"}, {"ja", "Japanese"},
      {"ru", "Russian"},  {"fr", "French"},  {"de", "German"},
      {"th", "Thai"},     {"nl", "Dutch"},   {"vi", "Vietnamese"},
      {"tr", "Turkish"},  {"cs", "Czech"},   {"es", "Spanish"},
      {"it", "Italian"},  {"pt", "Portuguese"}, {"ko", "Korean"},
      {"ar", "Arabic"},
  };
  auto it = kNames.find(lang);
  if (it != kNames.end()) return std::string(it->second);
  return std::string(lang);
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && ascii_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace rmt
