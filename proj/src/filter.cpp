#include "aof/filter.hpp"

#include <algorithm>

#include <json.hpp>

#include "aof/error.hpp"
#include "aof/unicode.hpp"

namespace aof::filter {
namespace {

using genclient::BilingualRiddle;
using nlohmann::json;

// Case-insensitive prefix test after stripping leading quotes/whitespace.
bool opener_matches(const std::string& text, const std::string& opener) {
    static const std::set<char32_t> kLeading = {U'"', U'\'', U'“', U'‘', U'«', U'「', U'『',
                                                U'(', U'（', U'¿', U'*', U'-'};
    std::vector<char32_t> cps = uni::decode_utf8(text);
    size_t start = 0;
    while (start < cps.size() && (uni::is_whitespace(cps[start]) || kLeading.count(cps[start])))
        start++;
    std::string stripped;
    for (size_t i = start; i < cps.size(); ++i) uni::append_utf8(stripped, cps[i]);
    std::string lhs = uni::lowercase(stripped);
    std::string rhs = uni::lowercase(opener);
    return !rhs.empty() && lhs.rfind(rhs, 0) == 0;
}

bool ends_with_pattern(const std::string& text, const std::string& pattern) {
    // trailing quotes/whitespace after the closure formula are tolerated
    static const std::set<char32_t> kTrailing = {U'"', U'\'', U'”', U'’', U'»', U'」', U'』',
                                                 U')', U'）'};
    std::vector<char32_t> cps = uni::decode_utf8(text);
    size_t end = cps.size();
    while (end > 0 && (uni::is_whitespace(cps[end - 1]) || kTrailing.count(cps[end - 1]))) end--;
    std::string trimmed;
    for (size_t i = 0; i < end; ++i) uni::append_utf8(trimmed, cps[i]);
    std::string lhs = uni::lowercase(trimmed);
    std::string rhs = uni::lowercase(pattern);
    return rhs.size() <= lhs.size() && lhs.compare(lhs.size() - rhs.size(), rhs.size(), rhs) == 0;
}

} // namespace

FilterConfig FilterConfig::defaults() {
    FilterConfig config;
    config.banned_answers[Language::en] = {"shadow", "time",   "echo",   "fire",
                                           "breath", "wind",   "silence"};
    config.banned_openers = {"I have", "I am"};
    config.closure_patterns[Language::en] = {"What am I?"};
    return config;
}

void FilterConfig::validate() const {
    if (!(theta > 0.0) || theta > 1.0)
        throw ConfigError("filter: theta must be in (0, 1]");
    if (max_attempts < 1) throw ConfigError("filter: max_attempts must be >= 1");
    if (closure_quota < 0) throw ConfigError("filter: closure_quota must be >= 0");
}

std::string trace_to_jsonl(std::span<const FilterDecision> trace) {
    std::string out;
    for (const FilterDecision& d : trace) {
        json obj = {{"attempt", d.attempt},
                    {"riddle_index", d.riddle_index},
                    {"score", d.score},
                    {"accepted", d.accepted},
                    {"violations", d.violations}};
        if (d.nearest_reference_id) obj["nearest_reference_id"] = *d.nearest_reference_id;
        else obj["nearest_reference_id"] = nullptr;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::vector<FilterDecision> trace_from_jsonl(const std::string& jsonl) {
    std::vector<FilterDecision> out;
    size_t pos = 0;
    while (pos < jsonl.size()) {
        size_t nl = jsonl.find('\n', pos);
        if (nl == std::string::npos) nl = jsonl.size();
        std::string line = jsonl.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj = json::parse(line);
        FilterDecision d;
        d.attempt = obj.value("attempt", 0);
        d.riddle_index = obj.value("riddle_index", 0);
        d.score = obj.value("score", 0.0);
        d.accepted = obj.value("accepted", false);
        if (obj.contains("violations"))
            d.violations = obj["violations"].get<std::vector<std::string>>();
        if (obj.contains("nearest_reference_id") && obj["nearest_reference_id"].is_string())
            d.nearest_reference_id = obj["nearest_reference_id"].get<std::string>();
        out.push_back(std::move(d));
    }
    return out;
}

NoveltyResult novelty_score(const embed::EmbeddingVector& candidate,
                            std::span<const ReferenceEmbedding> references) {
    NoveltyResult result;
    for (const auto& [id, vec] : references) {
        double c = embed::cosine(candidate, vec);
        if (!result.nearest_id || c > result.score) {
            result.score = c;
            result.nearest_id = id;
        }
    }
    return result;
}

std::vector<std::string> check_riddle_constraints(const BilingualRiddle& riddle, LanguagePair pair,
                                                  const FilterConfig& config) {
    std::vector<std::string> violations;

    auto answer_banned = [&](Language lang, const std::string& answer) {
        auto it = config.banned_answers.find(lang);
        if (it == config.banned_answers.end()) return false;
        return it->second.count(uni::lowercase(uni::normalize_text(answer))) > 0;
    };
    if (answer_banned(pair.source, riddle.answer_source) ||
        answer_banned(pair.target, riddle.answer_target))
        violations.emplace_back(kBannedAnswer);

    bool opener_hit = std::any_of(config.banned_openers.begin(), config.banned_openers.end(),
                                  [&](const std::string& o) {
                                      return opener_matches(riddle.text_source, o);
                                  });
    if (!opener_hit) {
        auto it = config.banned_openers_by_language.find(pair.target);
        if (it != config.banned_openers_by_language.end())
            opener_hit = std::any_of(it->second.begin(), it->second.end(),
                                     [&](const std::string& o) {
                                         return opener_matches(riddle.text_target, o);
                                     });
    }
    if (opener_hit) violations.emplace_back(kBannedOpener);

    return violations;
}

std::vector<std::string> check_batch_constraints(std::span<const BilingualRiddle> batch,
                                                 const FilterConfig& config) {
    auto it = config.closure_patterns.find(Language::en);
    if (it == config.closure_patterns.end() || it->second.empty()) return {};
    int closures = 0;
    for (const BilingualRiddle& riddle : batch)
        for (const std::string& pattern : it->second)
            if (ends_with_pattern(riddle.text_source, pattern)) {
                closures++;
                break;
            }
    if (closures > config.closure_quota) return {kClosureQuotaExceeded};
    return {};
}

// ---------------------------------------------------------------------------
// ReferenceIndex

ReferenceIndex ReferenceIndex::build(const corpus::ReferenceCorpus& corpus,
                                     embed::Embedder& embedder) {
    ReferenceIndex index;
    for (const auto& record : corpus.records)
        index.by_language_[record.language].emplace_back(record.id, embedder.embed(record.text));
    return index;
}

std::span<const ReferenceEmbedding> ReferenceIndex::references(Language lang) const {
    auto it = by_language_.find(lang);
    if (it == by_language_.end()) return {};
    return it->second;
}

void ReferenceIndex::add(Language lang, std::string id, embed::EmbeddingVector vec) {
    by_language_[lang].emplace_back(std::move(id), std::move(vec));
}

size_t ReferenceIndex::total() const {
    size_t n = 0;
    for (const auto& [lang, refs] : by_language_) n += refs.size();
    return n;
}

// ---------------------------------------------------------------------------
// Rejection sampling

AofOutcome aof_generate(const std::string& prompt, genclient::Generator& generator,
                        LanguagePair pair, size_t batch_size, ReferenceIndex& references,
                        embed::Embedder& embedder, const FilterConfig& config) {
    config.validate();
    AofOutcome outcome;

    for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
        outcome.attempts_used = attempt;
        std::string raw = generator.generate(prompt); // transport errors propagate

        genclient::ParsedBatch parsed;
        try {
            parsed = genclient::parse_riddles(raw, pair, batch_size);
        } catch (const ParseFailure&) {
            FilterDecision d;
            d.attempt = attempt;
            d.riddle_index = -1;
            d.violations = {kParseFailureLabel};
            outcome.trace.push_back(std::move(d));
            continue;
        }

        std::vector<std::string> batch_violations =
            check_batch_constraints(parsed.riddles, config);

        std::vector<FilterDecision> decisions;
        decisions.reserve(parsed.riddles.size());
        for (const auto& riddle : parsed.riddles) {
            FilterDecision d;
            d.attempt = attempt;
            d.riddle_index = riddle.index;

            // both sides, each against same-language references
            embed::EmbeddingVector src_vec = embedder.embed(riddle.text_source);
            embed::EmbeddingVector tgt_vec = embedder.embed(riddle.text_target);
            NoveltyResult src = novelty_score(src_vec, references.references(pair.source));
            NoveltyResult tgt = novelty_score(tgt_vec, references.references(pair.target));
            if (tgt.score > src.score) {
                d.score = tgt.score;
                d.nearest_reference_id = tgt.nearest_id;
            } else {
                d.score = src.score;
                d.nearest_reference_id = src.nearest_id;
            }

            d.violations = check_riddle_constraints(riddle, pair, config);
            d.accepted = d.score < config.theta && d.violations.empty();
            decisions.push_back(std::move(d));
        }

        // Batch-level quota: mark every riddle that ends with a closure
        // pattern, and fail the attempt.
        if (!batch_violations.empty()) {
            auto it = config.closure_patterns.find(Language::en);
            for (size_t i = 0; i < parsed.riddles.size(); ++i) {
                bool contributes = false;
                if (it != config.closure_patterns.end())
                    for (const std::string& pattern : it->second)
                        if (ends_with_pattern(parsed.riddles[i].text_source, pattern)) {
                            contributes = true;
                            break;
                        }
                if (contributes) {
                    decisions[i].violations.emplace_back(kClosureQuotaExceeded);
                    decisions[i].accepted = false;
                }
            }
        }

        const bool all_accepted = !parsed.riddles.empty() &&
                                  std::all_of(decisions.begin(), decisions.end(),
                                              [](const FilterDecision& d) { return d.accepted; });

        for (FilterDecision& d : decisions) outcome.trace.push_back(std::move(d));

        if (all_accepted) {
            if (config.include_accepted_in_reference) {
                for (const auto& riddle : parsed.riddles) {
                    std::string id = "accepted:" + std::to_string(attempt) + ":" +
                                     std::to_string(riddle.index);
                    references.add(pair.source, id + ":src", embedder.embed(riddle.text_source));
                    references.add(pair.target, id + ":tgt", embedder.embed(riddle.text_target));
                }
            }
            outcome.batch = std::move(parsed.riddles);
            return outcome;
        }
    }
    return outcome; // cap exhausted: batch absent, trace complete
}

} // namespace aof::filter
