#pragma once

#include <string>
#include <string_view>

namespace synthaudit::unicode {

// UTF-8 <-> UTF-32. Invalid sequences decode to U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

/// Canonical composition (NFC).
std::string nfc(std::string_view utf8);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);
char32_t to_lower(char32_t cp);

/// Number of code points in a UTF-8 string.
std::size_t length(std::string_view utf8);

/// Substring by code point offsets [start, end).
std::string substr(std::string_view utf8, std::size_t start, std::size_t end);

} // namespace synthaudit::unicode
