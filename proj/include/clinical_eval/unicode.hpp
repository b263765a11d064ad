#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clineval::uni {

// Decodes UTF-8 into codepoints. Invalid bytes decode as U+FFFD and
// consume one byte, so decoding is total.
std::vector<char32_t> decode_utf8(std::string_view text);

// Encodes a codepoint sequence back to UTF-8.
std::string encode_utf8(const std::vector<char32_t>& codepoints);
void append_utf8(std::string& out, char32_t cp);

// Unicode general categories L* or Nd, from a generated table.
bool is_alnum(char32_t cp);

// Simple (single-codepoint) lowercase mapping; identity when none exists.
char32_t to_lower(char32_t cp);

}  // namespace clineval::uni
