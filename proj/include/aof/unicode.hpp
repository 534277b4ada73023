#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aof/language.hpp"

namespace aof::uni {

// UTF-8 decoding is total: malformed sequences decode to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(const std::vector<char32_t>& cps);

// Canonical composition only (no compatibility folding, no case change).
std::string nfc(std::string_view text);

// Canonical text form used everywhere as a dedup/embedding key:
// NFC, then every run of Unicode whitespace (including U+3000) becomes one
// ASCII space, then outer whitespace is trimmed. Idempotent.
std::string normalize_text(std::string_view text);

bool is_whitespace(char32_t cp);
bool is_punct_or_symbol(char32_t cp);

enum class Script { latin, han, kana, arabic, other };
Script script_of(char32_t cp);

struct ScriptCounts {
    size_t latin = 0;
    size_t han = 0;
    size_t kana = 0;
    size_t arabic = 0;
    size_t letters = 0; // total codepoints counted as letters
};
ScriptCounts count_scripts(std::string_view text);

// Dominant-script check used by the structural validator and the response
// parser. Kana presence marks text Japanese even when Han characters
// dominate, since Japanese prose mixes both.
bool script_matches_language(std::string_view text, Language lang);

// Lowercase by simple per-codepoint mapping; enough for answer/opener
// matching against configured word lists.
std::string lowercase(std::string_view text);

} // namespace aof::uni
