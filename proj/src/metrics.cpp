#include "aof/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "aof/error.hpp"
#include "aof/unicode.hpp"

namespace aof::metrics {
namespace {

using Ngram = std::vector<std::string>;

std::vector<std::string> tokenize_character(std::string_view text) {
    std::vector<std::string> tokens;
    for (char32_t cp : uni::decode_utf8(text)) {
        if (uni::is_whitespace(cp)) continue;
        std::string tok;
        uni::append_utf8(tok, cp);
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::vector<std::string> tokenize_whitespace(std::string_view text, bool split_punct) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (char32_t cp : uni::decode_utf8(text)) {
        if (uni::is_whitespace(cp)) {
            flush();
        } else if (split_punct && uni::is_punct_or_symbol(cp)) {
            flush();
            std::string tok;
            uni::append_utf8(tok, cp);
            tokens.push_back(std::move(tok));
        } else {
            uni::append_utf8(current, cp);
        }
    }
    flush();
    return tokens;
}

std::map<Ngram, int> count_ngrams(const std::vector<std::string>& tokens, int n) {
    std::map<Ngram, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i)
        counts[Ngram(tokens.begin() + i, tokens.begin() + i + n)]++;
    return counts;
}

// Geometric mean of the included precisions. Orders 1, 2 and 4 avoid pow so
// the result does not depend on the platform's libm.
double geometric_mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double product = 1.0;
    for (double v : values) product *= v;
    switch (values.size()) {
    case 1: return product;
    case 2: return std::sqrt(product);
    case 4: return std::sqrt(std::sqrt(product));
    default: return std::pow(product, 1.0 / static_cast<double>(values.size()));
    }
}

} // namespace

void MetricConfig::validate() const {
    if (ngram_order < 1) throw ConfigError("metrics: ngram_order must be >= 1");
    if (!(smoothing_epsilon > 0.0)) throw ConfigError("metrics: smoothing_epsilon must be > 0");
}

std::vector<std::string> tokenize(std::string_view text, Language lang, TokenizerMode mode) {
    switch (mode) {
    case TokenizerMode::character: return tokenize_character(text);
    case TokenizerMode::whitespace: return tokenize_whitespace(text, /*split_punct=*/false);
    case TokenizerMode::automatic:
        if (lang == Language::zh || lang == Language::ja) return tokenize_character(text);
        return tokenize_whitespace(text, /*split_punct=*/true);
    }
    return {};
}

double self_bleu(std::span<const std::string> batch, Language lang, const MetricConfig& config) {
    config.validate();
    if (batch.size() < 2) throw Error("self_bleu: batch must contain at least two texts");

    std::vector<std::vector<std::string>> token_lists;
    token_lists.reserve(batch.size());
    for (const std::string& text : batch)
        token_lists.push_back(tokenize(text, lang, config.tokenization));

    // n-gram counts per (text, order), computed once
    std::vector<std::vector<std::map<Ngram, int>>> counts(token_lists.size());
    for (size_t t = 0; t < token_lists.size(); ++t)
        for (int n = 1; n <= config.ngram_order; ++n)
            counts[t].push_back(count_ngrams(token_lists[t], n));

    double total = 0.0;
    for (size_t h = 0; h < token_lists.size(); ++h) {
        const std::vector<std::string>& hyp = token_lists[h];
        const auto hyp_len = static_cast<long>(hyp.size());

        std::vector<double> precisions;
        for (int n = 1; n <= config.ngram_order; ++n) {
            long hyp_total = hyp_len - n + 1;
            if (hyp_total <= 0) continue; // no n-grams at this order: skip it

            // modified precision: clip by the maximum count across references
            long clipped = 0;
            for (const auto& [gram, count] : counts[h][n - 1]) {
                int max_ref = 0;
                for (size_t r = 0; r < token_lists.size(); ++r) {
                    if (r == h) continue;
                    auto it = counts[r][n - 1].find(gram);
                    if (it != counts[r][n - 1].end()) max_ref = std::max(max_ref, it->second);
                }
                clipped += std::min(count, max_ref);
            }
            double precision = static_cast<double>(clipped) / static_cast<double>(hyp_total);
            precisions.push_back(std::max(precision, config.smoothing_epsilon));
        }

        double bleu = 0.0;
        if (!precisions.empty() && hyp_len > 0) {
            // closest reference length, ties to the shorter one
            long closest = 0;
            long best_gap = -1;
            for (size_t r = 0; r < token_lists.size(); ++r) {
                if (r == h) continue;
                auto ref_len = static_cast<long>(token_lists[r].size());
                long gap = std::labs(ref_len - hyp_len);
                if (best_gap < 0 || gap < best_gap || (gap == best_gap && ref_len < closest)) {
                    best_gap = gap;
                    closest = ref_len;
                }
            }
            double brevity = 1.0;
            if (hyp_len < closest)
                brevity = std::exp(1.0 - static_cast<double>(closest) / static_cast<double>(hyp_len));
            bleu = brevity * geometric_mean(precisions);
        }
        total += bleu;
    }
    return total / static_cast<double>(batch.size());
}

double distinct_n(std::span<const std::string> batch, Language lang, int n, TokenizerMode mode) {
    if (n < 1) throw Error("distinct_n: n must be >= 1");
    std::set<Ngram> unique;
    long total = 0;
    for (const std::string& text : batch) {
        std::vector<std::string> tokens = tokenize(text, lang, mode);
        if (static_cast<int>(tokens.size()) < n) continue;
        for (size_t i = 0; i + n <= tokens.size(); ++i) {
            unique.insert(Ngram(tokens.begin() + i, tokens.begin() + i + n));
            total++;
        }
    }
    if (total == 0)
        throw Error("distinct_n: no " + std::to_string(n) + "-grams available in the batch");
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double mean_token_length(std::span<const std::string> batch, Language lang, TokenizerMode mode) {
    if (batch.empty()) throw Error("mean_token_length: empty batch");
    double total = 0.0;
    for (const std::string& text : batch)
        total += static_cast<double>(tokenize(text, lang, mode).size());
    return total / static_cast<double>(batch.size());
}

double alignment_score(std::span<const genclient::BilingualRiddle> batch,
                       embed::Embedder& embedder) {
    if (batch.empty()) throw Error("alignment_score: empty batch");
    double total = 0.0;
    for (const auto& riddle : batch) {
        embed::EmbeddingVector src = embedder.embed(riddle.text_source);
        embed::EmbeddingVector tgt = embedder.embed(riddle.text_target);
        total += embed::cosine(src, tgt);
    }
    return total / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Structural validity

namespace {

struct PunctPair {
    char32_t open;
    char32_t close;
};

// ASCII quotes are ambiguous (same open/close character) and are skipped.
constexpr PunctPair kPairs[] = {
    {U'(', U')'},   {U'[', U']'},   {U'{', U'}'},   {U'（', U'）'}, {U'［', U'］'},
    {U'｛', U'｝'}, {U'「', U'」'}, {U'『', U'』'}, {U'《', U'》'}, {U'〈', U'〉'},
    {U'【', U'】'}, {U'〔', U'〕'}, {U'“', U'”'},  {U'‘', U'’'},  {U'«', U'»'},
};

bool balanced_pairs(std::string_view text) {
    std::vector<char32_t> stack;
    for (char32_t cp : uni::decode_utf8(text)) {
        for (const PunctPair& p : kPairs) {
            if (cp == p.open) {
                stack.push_back(p.close);
                break;
            }
            if (cp == p.close) {
                if (stack.empty() || stack.back() != p.close) return false;
                stack.pop_back();
                break;
            }
        }
    }
    return stack.empty();
}

bool has_terminal_punctuation(std::string_view text) {
    static const std::set<char32_t> terminals = {U'.', U'!', U'?', U'…', U'。',
                                                 U'！', U'？', U'؟', U'۔'};
    static const std::set<char32_t> trailing_ok = {U')', U'）', U'」', U'』', U'》',
                                                   U'〉', U'】', U'〕', U'”', U'’',
                                                   U'»', U'"', U'\''};
    std::vector<char32_t> cps = uni::decode_utf8(text);
    for (auto it = cps.rbegin(); it != cps.rend(); ++it) {
        if (uni::is_whitespace(*it) || trailing_ok.count(*it)) continue;
        return terminals.count(*it) > 0;
    }
    return false;
}

} // namespace

bool HeuristicValidator::valid(const genclient::BilingualRiddle& riddle, LanguagePair pair) const {
    if (uni::normalize_text(riddle.text_source).empty()) return false;
    if (uni::normalize_text(riddle.text_target).empty()) return false;
    if (!balanced_pairs(riddle.text_source) || !balanced_pairs(riddle.text_target)) return false;
    if (!has_terminal_punctuation(riddle.text_source)) return false;
    if (!has_terminal_punctuation(riddle.text_target)) return false;
    if (!uni::script_matches_language(riddle.text_source, pair.source)) return false;
    if (!uni::script_matches_language(riddle.text_target, pair.target)) return false;
    return true;
}

double structural_validity(std::span<const genclient::BilingualRiddle> batch, LanguagePair pair,
                           const StructuralValidator& validator) {
    if (batch.empty()) throw Error("structural_validity: empty batch");
    size_t passing = 0;
    for (const auto& riddle : batch) {
        bool ok = false;
        try {
            ok = validator.valid(riddle, pair);
        } catch (...) {
            ok = false;
        }
        if (ok) passing++;
    }
    return static_cast<double>(passing) / static_cast<double>(batch.size());
}

} // namespace aof::metrics
