#include "aof/language.hpp"

namespace aof {

std::optional<Language> parse_language(std::string_view code) {
    if (code == "en") return Language::en;
    if (code == "zh") return Language::zh;
    if (code == "ja") return Language::ja;
    if (code == "ar") return Language::ar;
    if (code == "fr") return Language::fr;
    return std::nullopt;
}

std::string_view to_code(Language lang) {
    switch (lang) {
    case Language::en: return "en";
    case Language::zh: return "zh";
    case Language::ja: return "ja";
    case Language::ar: return "ar";
    case Language::fr: return "fr";
    }
    return "??";
}

std::string_view language_name(Language lang) {
    switch (lang) {
    case Language::en: return "English";
    case Language::zh: return "Chinese";
    case Language::ja: return "Japanese";
    case Language::ar: return "Arabic";
    case Language::fr: return "French";
    }
    return "?";
}

std::string pair_code(LanguagePair pair) {
    std::string out(to_code(pair.source));
    out += '-';
    out += to_code(pair.target);
    return out;
}

std::optional<LanguagePair> parse_pair(std::string_view s) {
    size_t sep = s.find_first_of("-_");
    if (sep == std::string_view::npos) return std::nullopt;
    auto src = parse_language(s.substr(0, sep));
    auto tgt = parse_language(s.substr(sep + 1));
    if (!src || !tgt || *src != Language::en || *tgt == Language::en) return std::nullopt;
    return LanguagePair{*src, *tgt};
}

} // namespace aof
