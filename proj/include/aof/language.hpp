#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace aof {

// Supported ISO 639-1 codes. English is always the source side of a pair.
enum class Language { en, zh, ja, ar, fr };

std::optional<Language> parse_language(std::string_view code);
std::string_view to_code(Language lang);
std::string_view language_name(Language lang); // "English", "Chinese", ...

struct LanguagePair {
    Language source = Language::en;
    Language target = Language::zh;

    bool operator==(const LanguagePair&) const = default;
};

std::string pair_code(LanguagePair pair);                    // "en-zh"
std::optional<LanguagePair> parse_pair(std::string_view s);  // accepts "en-zh" / "en_zh"

} // namespace aof
