#include "aof/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>

#include "aof/error.hpp"

namespace aof::uni {

std::vector<char32_t> decode_utf8(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    size_t i = 0;
    const auto byte = [&](size_t k) { return static_cast<unsigned char>(text[k]); };
    while (i < text.size()) {
        unsigned char b0 = byte(i);
        char32_t cp = 0xFFFD;
        size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0 && i + 1 < text.size() && (byte(i + 1) & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F);
            len = 2;
            if (cp < 0x80) cp = 0xFFFD; // overlong
        } else if ((b0 & 0xF0) == 0xE0 && i + 2 < text.size() && (byte(i + 1) & 0xC0) == 0x80 &&
                   (byte(i + 2) & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(byte(i + 1) & 0x3F) << 6) |
                 (byte(i + 2) & 0x3F);
            len = 3;
            if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
        } else if ((b0 & 0xF8) == 0xF0 && i + 3 < text.size() && (byte(i + 1) & 0xC0) == 0x80 &&
                   (byte(i + 2) & 0xC0) == 0x80 && (byte(i + 3) & 0xC0) == 0x80) {
            cp = (char32_t(b0 & 0x07) << 18) | (char32_t(byte(i + 1) & 0x3F) << 12) |
                 (char32_t(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F);
            len = 4;
            if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size() * 3);
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

std::string nfc(std::string_view text) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || norm == nullptr)
        throw Error("unicode: NFC normalizer unavailable");
    icu::UnicodeString input =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString normalized = norm->normalize(input, status);
    if (U_FAILURE(status)) throw Error("unicode: NFC normalization failed");
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

bool is_whitespace(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

bool is_punct_or_symbol(char32_t cp) {
    auto c = static_cast<UChar32>(cp);
    return u_ispunct(c) || (U_GET_GC_MASK(c) & U_GC_S_MASK) != 0;
}

std::string normalize_text(std::string_view text) {
    std::vector<char32_t> cps = decode_utf8(nfc(text));
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    bool seen_content = false;
    for (char32_t cp : cps) {
        if (is_whitespace(cp)) {
            pending_space = seen_content; // leading whitespace drops
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        append_utf8(out, cp);
        seen_content = true;
    }
    return out;
}

Script script_of(char32_t cp) {
    UErrorCode status = U_ZERO_ERROR;
    UScriptCode code = uscript_getScript(static_cast<UChar32>(cp), &status);
    if (U_FAILURE(status)) return Script::other;
    switch (code) {
    case USCRIPT_LATIN: return Script::latin;
    case USCRIPT_HAN: return Script::han;
    case USCRIPT_HIRAGANA:
    case USCRIPT_KATAKANA:
    case USCRIPT_KATAKANA_OR_HIRAGANA: return Script::kana;
    case USCRIPT_ARABIC: return Script::arabic;
    default: return Script::other;
    }
}

ScriptCounts count_scripts(std::string_view text) {
    ScriptCounts counts;
    for (char32_t cp : decode_utf8(text)) {
        if (!u_isalpha(static_cast<UChar32>(cp)) &&
            !u_hasBinaryProperty(static_cast<UChar32>(cp), UCHAR_IDEOGRAPHIC))
            continue;
        counts.letters++;
        switch (script_of(cp)) {
        case Script::latin: counts.latin++; break;
        case Script::han: counts.han++; break;
        case Script::kana: counts.kana++; break;
        case Script::arabic: counts.arabic++; break;
        case Script::other: break;
        }
    }
    return counts;
}

bool script_matches_language(std::string_view text, Language lang) {
    ScriptCounts c = count_scripts(text);
    if (c.letters == 0) return false;
    const size_t half = c.letters / 2;
    switch (lang) {
    case Language::en:
    case Language::fr: return c.latin > half;
    case Language::zh: return c.han > half && c.kana == 0;
    case Language::ja: return c.kana > 0 && (c.kana + c.han) > half;
    case Language::ar: return c.arabic > half;
    }
    return false;
}

std::string lowercase(std::string_view text) {
    std::vector<char32_t> cps = decode_utf8(text);
    for (char32_t& cp : cps) cp = static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
    return encode_utf8(cps);
}

} // namespace aof::uni
