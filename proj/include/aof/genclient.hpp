#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aof/language.hpp"

namespace aof::genclient {

struct GenerationConfig {
    std::string model_id;
    double temperature = 0.7;
    int max_tokens = 3000;
    std::string endpoint; // chat-completions-style URL
    std::string api_key_env = "AOF_API_KEY"; // empty sends no Authorization header
    int retry_attempts = 3;
    int retry_backoff_ms = 500;

    void validate() const;
};

// One generated riddle with both language sides.
struct BilingualRiddle {
    int index = 0; // position within the parsed batch
    std::string text_source;
    std::string text_target;
    std::string answer_source;
    std::string answer_target;
};

struct TokenUsage {
    int64_t prompt_tokens = 0;
    int64_t completion_tokens = 0;
};

struct GenerationTranscript {
    std::string prompt;
    std::string raw_response;
    std::string model_id;
    std::string timestamp; // ISO-8601 UTC
    std::optional<TokenUsage> usage;

    std::string to_json_line() const;
    static GenerationTranscript from_json_line(const std::string& line);
};

// Append-only JSONL sink, safe for concurrent appends.
class TranscriptWriter {
public:
    explicit TranscriptWriter(std::filesystem::path file);
    void append(const GenerationTranscript& transcript);
    const std::filesystem::path& file() const { return file_; }

private:
    std::filesystem::path file_;
    std::mutex mutex_;
};

// Uniform generation contract. Every call leaves exactly one transcript
// record in the attached writer before returning.
class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string generate(const std::string& prompt) = 0;
    virtual std::string model_id() const = 0;
};

class HttpGenerator final : public Generator {
public:
    HttpGenerator(GenerationConfig config, TranscriptWriter* sink);
    std::string generate(const std::string& prompt) override;
    std::string model_id() const override { return config_.model_id; }

private:
    GenerationConfig config_;
    TranscriptWriter* sink_;
};

// Replays recorded responses in order; the fixture file uses the transcript
// format, so a recorded live run replays verbatim (including timestamps,
// keeping replayed artifact trees byte-identical).
class ReplayGenerator final : public Generator {
public:
    ReplayGenerator(std::filesystem::path fixture, TranscriptWriter* sink);
    std::string generate(const std::string& prompt) override;
    std::string model_id() const override { return model_id_; }
    size_t calls_made() const { return cursor_; }

private:
    std::vector<GenerationTranscript> records_;
    std::string model_id_;
    size_t cursor_ = 0;
    TranscriptWriter* sink_;
};

struct ParseWarning {
    int item_number = 0; // as numbered in the raw response
    std::string reason;
};

struct ParsedBatch {
    std::vector<BilingualRiddle> riddles;
    std::vector<ParseWarning> warnings;
};

// Parses numbered bilingual items out of a raw model response. Sides come
// from labeled lines (EN:/ZH:/.../Answer:) when present, otherwise from
// per-line script detection (Latin lines position-disambiguated for en/fr).
// Malformed items are dropped with a warning. Fewer than
// ceil(expected_batch / 2) well-formed items is a ParseFailure.
ParsedBatch parse_riddles(std::string_view raw, LanguagePair pair, size_t expected_batch);

} // namespace aof::genclient
