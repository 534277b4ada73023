#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aof/corpus.hpp"
#include "aof/embed.hpp"
#include "aof/genclient.hpp"
#include "aof/language.hpp"

namespace aof::filter {

struct FilterConfig {
    double theta = 0.75;     // acceptance is strictly below theta
    int max_attempts = 5;    // retry cap on whole generator calls
    bool include_accepted_in_reference = true;

    // Lexical constraints, verbalized into AOF prompts and enforced on
    // parsed outputs.
    std::map<Language, std::set<std::string>> banned_answers; // lowercase
    std::vector<std::string> banned_openers;                  // English side
    std::map<Language, std::vector<std::string>> banned_openers_by_language; // target side
    std::map<Language, std::vector<std::string>> closure_patterns;           // endings, English side
    int closure_quota = 3;

    static FilterConfig defaults();
    void validate() const;
};

// Violation labels.
inline constexpr const char* kBannedAnswer = "banned_answer";
inline constexpr const char* kBannedOpener = "banned_opener";
inline constexpr const char* kClosureQuotaExceeded = "closure_quota_exceeded";
inline constexpr const char* kParseFailureLabel = "parse_failure";

struct FilterDecision {
    int attempt = 0;       // 1-based
    int riddle_index = 0;  // -1 marks an attempt-level parse failure
    double score = 0.0;    // max cosine against the reference set
    std::optional<std::string> nearest_reference_id;
    bool accepted = false;
    std::vector<std::string> violations;
};

// JSONL, one decision per line with fields
// (attempt, riddle_index, score, nearest_reference_id, accepted, violations).
std::string trace_to_jsonl(std::span<const FilterDecision> trace);
std::vector<FilterDecision> trace_from_jsonl(const std::string& jsonl);

using ReferenceEmbedding = std::pair<std::string, embed::EmbeddingVector>;

struct NoveltyResult {
    double score = 0.0; // 0 for an empty reference set: nothing to resemble
    std::optional<std::string> nearest_id;
};

// Maximum cosine over the reference list; argmax ties break to the first
// occurrence. Throws on model/dimension mismatch.
NoveltyResult novelty_score(const embed::EmbeddingVector& candidate,
                            std::span<const ReferenceEmbedding> references);

std::vector<std::string> check_riddle_constraints(const genclient::BilingualRiddle& riddle,
                                                  LanguagePair pair, const FilterConfig& config);

// [closure_quota_exceeded] iff more than closure_quota riddles' English sides
// end with a configured closure pattern.
std::vector<std::string> check_batch_constraints(std::span<const genclient::BilingualRiddle> batch,
                                                 const FilterConfig& config);

// Per-language reference embeddings, mutable so accepted riddles can join
// the live set between attempts.
class ReferenceIndex {
public:
    ReferenceIndex() = default;
    static ReferenceIndex build(const corpus::ReferenceCorpus& corpus, embed::Embedder& embedder);

    std::span<const ReferenceEmbedding> references(Language lang) const;
    void add(Language lang, std::string id, embed::EmbeddingVector vec);
    size_t total() const;

private:
    std::map<Language, std::vector<ReferenceEmbedding>> by_language_;
};

struct AofOutcome {
    std::optional<std::vector<genclient::BilingualRiddle>> batch; // absent: cap exhausted
    std::vector<FilterDecision> trace;
    int attempts_used = 0;
};

// Rejection-sampling loop: call the generator, parse, score each riddle's
// two language sides against same-language references (a riddle fails if
// either side reaches theta), check lexical and batch constraints; retry on
// any failure up to max_attempts. An accepted batch joins the live
// references when configured. Parse failures consume an attempt and leave a
// trace entry; generator transport errors propagate.
AofOutcome aof_generate(const std::string& prompt, genclient::Generator& generator,
                        LanguagePair pair, size_t batch_size, ReferenceIndex& references,
                        embed::Embedder& embedder, const FilterConfig& config);

} // namespace aof::filter
