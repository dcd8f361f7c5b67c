#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stereoscope {

struct Token {
  std::string text;
  std::size_t position = 0;  // 0-based occurrence index within the text

  bool operator==(const Token&) const = default;
};

// Decodes UTF-8 into Unicode scalar values. Throws DataError on malformed input.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
bool is_valid_utf8(std::string_view text);

// Number of Unicode scalar values in the text.
std::size_t scalar_count(std::string_view text);

bool is_word_char(char32_t c);

// Maximal runs of Unicode letters/digits, case preserved.
//
// The classifier uses lowercase_tokens() over the same runs, and both
// explainers mask over tokenize(), so feature and attribution tokens align.
std::vector<Token> tokenize(std::string_view text);

std::vector<std::string> lowercase_tokens(std::string_view text);

std::string to_lower(std::string_view text);

std::string trim(std::string_view text);

// Token texts joined with single spaces.
std::string join_tokens(const std::vector<Token>& tokens);

}  // namespace stereoscope
