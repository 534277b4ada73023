#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aof/language.hpp"
#include "aof/unicode.hpp"

namespace aof::corpus {

// Canonical text form shared by loading, dedup keys and embedding keys:
// NFC, Unicode whitespace runs collapsed to single ASCII spaces, trimmed.
inline std::string normalize_text(std::string_view text) { return uni::normalize_text(text); }

struct RiddleRecord {
    std::string id;
    Language language = Language::en;
    std::string text;   // normalized form
    std::string answer; // normalized form
    std::vector<std::string> distractors;
};

struct ReferenceCorpus {
    std::vector<RiddleRecord> records;

    std::map<Language, size_t> counts_by_language() const;
    size_t size() const { return records.size(); }
};

enum class CorpusFormat { jsonl, csv };

// CSV headers are mapped by name; these are the defaults.
struct CsvColumnMap {
    std::string id = "id";
    std::string language = "language";
    std::string text = "text";
    std::string answer = "answer";
    std::string distractors = "distractors"; // optional column; '|'-separated
};

struct CorpusLoadResult {
    ReferenceCorpus corpus;
    size_t duplicates_dropped = 0;
};

// Strict load: throws aof::Error naming the offending line/record on the
// first malformed input. Every kept record is normalized and the corpus is
// deduplicated on (language, normalized text), keeping the first occurrence.
//
// JSONL records use keys id/language/text/answer/distractors. Multiple-choice
// records are also accepted: `riddle` for the text, an `options` array with
// an integer `answer` (or `label`) index; the non-answer options become
// distractors.
CorpusLoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format,
                             const CsvColumnMap& columns = {});

struct MalformedRecord {
    size_t line = 0;       // 1-based line number
    std::string message;
};

// Lenient scan for diagnostics: collects malformed records instead of
// throwing on the first one.
struct CorpusDiagnostics {
    ReferenceCorpus corpus;
    size_t duplicates_dropped = 0;
    std::vector<MalformedRecord> malformed;
};

CorpusDiagnostics scan_corpus(const std::filesystem::path& path, CorpusFormat format,
                              const CsvColumnMap& columns = {});

// Stratified sample: exactly per_language records for each language present
// in the corpus, deterministic in (corpus, per_language, seed). Throws naming
// the deficient language when a stratum is too small.
ReferenceCorpus sample_balanced(const ReferenceCorpus& corpus, size_t per_language, uint64_t seed);

} // namespace aof::corpus
