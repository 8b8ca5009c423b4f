#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rmt {

// zh/ja/th have no reliable whitespace segmentation; those languages are
// tokenized per code point, everything else on whitespace.
bool char_tokenized_lang(std::string_view lang);

std::vector<std::string> tokenize(std::string_view text, std::string_view lang);

std::size_t token_count(std::string_view text, std::string_view lang);

// ISO-639-1 shape: exactly two lowercase ASCII letters.
bool valid_lang_code(std::string_view lang);

// "en" -> "English"; unknown codes fall back to the code itself.
std::string lang_display_name(std::string_view lang);

std::string trim_copy(std::string_view s);

}  // namespace rmt
