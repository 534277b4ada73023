#include "aof/genclient.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "aof/error.hpp"
#include "aof/unicode.hpp"

namespace aof::genclient {
namespace {

using nlohmann::json;

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct UrlParts {
    std::string base;
    std::string path;
};

UrlParts split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("invalid endpoint URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

} // namespace

void GenerationConfig::validate() const {
    if (model_id.empty()) throw ConfigError("generation config: model_id must be non-empty");
    if (temperature < 0.0) throw ConfigError("generation config: temperature must be >= 0");
    if (max_tokens < 1) throw ConfigError("generation config: max_tokens must be >= 1");
    if (retry_attempts < 1) throw ConfigError("generation config: retry_attempts must be >= 1");
}

// ---------------------------------------------------------------------------
// Transcripts

std::string GenerationTranscript::to_json_line() const {
    json obj = {{"prompt", prompt},
                {"raw_response", raw_response},
                {"model_id", model_id},
                {"timestamp", timestamp}};
    if (usage)
        obj["usage"] = {{"prompt_tokens", usage->prompt_tokens},
                        {"completion_tokens", usage->completion_tokens}};
    return obj.dump();
}

GenerationTranscript GenerationTranscript::from_json_line(const std::string& line) {
    json obj = json::parse(line);
    GenerationTranscript t;
    t.prompt = obj.value("prompt", "");
    t.raw_response = obj.value("raw_response", "");
    t.model_id = obj.value("model_id", "");
    t.timestamp = obj.value("timestamp", "");
    if (obj.contains("usage") && obj["usage"].is_object()) {
        TokenUsage usage;
        usage.prompt_tokens = obj["usage"].value("prompt_tokens", int64_t{0});
        usage.completion_tokens = obj["usage"].value("completion_tokens", int64_t{0});
        t.usage = usage;
    }
    return t;
}

TranscriptWriter::TranscriptWriter(std::filesystem::path file) : file_(std::move(file)) {}

void TranscriptWriter::append(const GenerationTranscript& transcript) {
    std::lock_guard lock(mutex_);
    std::ofstream out(file_, std::ios::app);
    if (!out) throw Error("cannot open transcript file for append: " + file_.string());
    out << transcript.to_json_line() << '\n';
    if (!out) throw Error("failed writing transcript: " + file_.string());
}

// ---------------------------------------------------------------------------
// HttpGenerator

HttpGenerator::HttpGenerator(GenerationConfig config, TranscriptWriter* sink)
    : config_(std::move(config)), sink_(sink) {
    config_.validate();
    if (config_.endpoint.empty())
        throw ConfigError("generation config: http generator requires an endpoint");
}

std::string HttpGenerator::generate(const std::string& prompt) {
    UrlParts url = split_url(config_.endpoint);
    httplib::Client client(url.base);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || key[0] == '\0')
            throw ConfigError("generator: API key environment variable '" + config_.api_key_env +
                              "' is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json request = {{"model", config_.model_id},
                    {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                    {"temperature", config_.temperature},
                    {"max_tokens", config_.max_tokens}};
    const std::string body = request.dump();

    std::string last_error;
    int backoff_ms = config_.retry_backoff_ms;
    for (int attempt = 1; attempt <= config_.retry_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (retryable_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }

        GenerationTranscript transcript;
        transcript.prompt = prompt;
        transcript.model_id = config_.model_id;
        transcript.timestamp = now_iso8601();

        if (res->status != 200) {
            if (sink_) sink_->append(transcript);
            throw TransportError("generation endpoint returned HTTP " + std::to_string(res->status) +
                                 ": " + res->body.substr(0, 200));
        }
        try {
            json response = json::parse(res->body);
            transcript.raw_response =
                response.at("choices").at(0).at("message").at("content").get<std::string>();
            if (response.contains("usage") && response["usage"].is_object()) {
                TokenUsage usage;
                usage.prompt_tokens = response["usage"].value("prompt_tokens", int64_t{0});
                usage.completion_tokens = response["usage"].value("completion_tokens", int64_t{0});
                transcript.usage = usage;
            }
        } catch (const json::exception& e) {
            if (sink_) sink_->append(transcript);
            throw TransportError(std::string("malformed chat-completions response: ") + e.what());
        }
        if (sink_) sink_->append(transcript);
        return transcript.raw_response;
    }

    GenerationTranscript transcript;
    transcript.prompt = prompt;
    transcript.model_id = config_.model_id;
    transcript.timestamp = now_iso8601();
    if (sink_) sink_->append(transcript);
    throw TransportError("generation request failed after " + std::to_string(config_.retry_attempts) +
                         " attempts (" + last_error + ") against " + config_.endpoint);
}

// ---------------------------------------------------------------------------
// ReplayGenerator

ReplayGenerator::ReplayGenerator(std::filesystem::path fixture, TranscriptWriter* sink)
    : sink_(sink) {
    std::ifstream in(fixture);
    if (!in) throw FixtureError("cannot open replay fixture: " + fixture.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records_.push_back(GenerationTranscript::from_json_line(line));
        } catch (const json::exception& e) {
            throw FixtureError("malformed replay fixture " + fixture.string() + ": " + e.what());
        }
    }
    model_id_ = records_.empty() ? std::string("replay") : records_.front().model_id;
}

std::string ReplayGenerator::generate(const std::string&) {
    if (cursor_ >= records_.size())
        throw FixtureError("replay fixture exhausted after " + std::to_string(records_.size()) +
                           " recorded responses");
    const GenerationTranscript& record = records_[cursor_++];
    if (sink_) sink_->append(record);
    return record.raw_response;
}

// ---------------------------------------------------------------------------
// Response parsing

namespace {

struct Labels {
    std::vector<std::string> source{"en:", "english:", "riddle (en):"};
    std::vector<std::string> answer{"answer:",  "answers:", "réponse:", "reponse:",
                                    "答案:",    "答案：",   "答え:",    "答え：",
                                    "الجواب:", "الإجابة:"};
    std::vector<std::string> target;

    explicit Labels(Language target_lang) {
        switch (target_lang) {
        case Language::zh: target = {"zh:", "chinese:", "中文:", "中文："}; break;
        case Language::ja: target = {"ja:", "japanese:", "日本語:", "日本語："}; break;
        case Language::ar: target = {"ar:", "arabic:", "العربية:"}; break;
        case Language::fr: target = {"fr:", "french:", "français:", "francais:"}; break;
        case Language::en: break;
        }
    }
};

std::string strip_markup(std::string_view line) {
    std::string s(line);
    // bullets and emphasis markers around the payload
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '-' ||
                          s.front() == '*' || s.front() == '>'))
        s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '*')) s.pop_back();
    return s;
}

// Case-insensitive prefix match for ASCII; byte match otherwise. Returns the
// remainder after the label, or nullopt.
std::optional<std::string> match_label(const std::string& line, const std::string& label) {
    if (line.size() < label.size()) return std::nullopt;
    for (size_t i = 0; i < label.size(); ++i) {
        char a = line[i], b = label[i];
        if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
        if (a != b) return std::nullopt;
    }
    std::string rest = line.substr(label.size());
    while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.erase(rest.begin());
    return rest;
}

std::optional<std::string> match_any(const std::string& line, const std::vector<std::string>& labels) {
    for (const auto& label : labels)
        if (auto rest = match_label(line, label)) return rest;
    return std::nullopt;
}

// Item marker: optional decoration, then digits, then . ) or :.
// Returns the item number and the remainder of the line.
std::optional<std::pair<int, std::string>> match_item_start(const std::string& line) {
    size_t i = 0;
    while (i < line.size() && (line[i] == '#' || line[i] == '*' || line[i] == ' ')) i++;
    size_t digits_begin = i;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') i++;
    if (i == digits_begin || i - digits_begin > 3) return std::nullopt;
    if (i >= line.size() || (line[i] != '.' && line[i] != ')' && line[i] != ':')) return std::nullopt;
    int number = std::stoi(line.substr(digits_begin, i - digits_begin));
    std::string rest = line.substr(i + 1);
    while (!rest.empty() && (rest.front() == ' ' || rest.front() == '*')) rest.erase(rest.begin());
    return std::make_pair(number, rest);
}

Language classify_line(const std::string& line, LanguagePair pair, bool source_seen) {
    uni::ScriptCounts c = uni::count_scripts(line);
    if (c.letters == 0) return pair.source;
    const size_t half = c.letters / 2;
    if (c.kana > 0 && c.kana + c.han > half) return Language::ja;
    if (c.han > half) return Language::zh;
    if (c.arabic > half) return Language::ar;
    if (c.latin > half) {
        // Latin serves both sides of en-fr; position disambiguates.
        if (pair.target == Language::fr && source_seen) return Language::fr;
        return Language::en;
    }
    return pair.source;
}

struct ItemAccumulator {
    int number = 0;
    std::string source_text;
    std::string target_text;
    std::string answer_source;
    std::string answer_target;
    bool has_answer = false;

    void append_side(Language side, LanguagePair pair, const std::string& text) {
        if (text.empty()) return;
        std::string& dest = (side == pair.target) ? target_text : source_text;
        if (!dest.empty()) dest += ' ';
        dest += text;
    }

    void set_answer(const std::string& content) {
        size_t slash = content.find('/');
        if (slash == std::string::npos) slash = content.find("／");
        if (slash == std::string::npos) {
            answer_source = content;
            answer_target = content;
        } else {
            size_t sep_len = content[slash] == '/' ? 1 : std::string("／").size();
            answer_source = content.substr(0, slash);
            answer_target = content.substr(slash + sep_len);
        }
        has_answer = true;
    }
};

} // namespace

ParsedBatch parse_riddles(std::string_view raw, LanguagePair pair, size_t expected_batch) {
    Labels labels(pair.target);
    ParsedBatch result;

    std::vector<ItemAccumulator> items;
    ItemAccumulator* current = nullptr;

    std::string line;
    size_t pos = 0;
    while (pos <= raw.size()) {
        size_t nl = raw.find('\n', pos);
        if (nl == std::string_view::npos) nl = raw.size();
        line = strip_markup(raw.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty()) continue;

        if (auto start = match_item_start(line)) {
            items.emplace_back();
            current = &items.back();
            current->number = start->first;
            line = start->second;
            if (line.empty()) continue;
        }
        if (current == nullptr) continue; // preamble before the first item

        if (auto rest = match_any(line, labels.answer)) {
            current->set_answer(*rest);
        } else if (auto rest_src = match_any(line, labels.source)) {
            current->append_side(pair.source, pair, *rest_src);
        } else if (auto rest_tgt = match_any(line, labels.target)) {
            current->append_side(pair.target, pair, *rest_tgt);
        } else if (auto rest_riddle = match_label(line, "riddle:")) {
            current->append_side(classify_line(*rest_riddle, pair, !current->source_text.empty()),
                                 pair, *rest_riddle);
        } else {
            current->append_side(classify_line(line, pair, !current->source_text.empty()), pair,
                                 line);
        }
    }

    for (const ItemAccumulator& item : items) {
        std::string text_source = uni::normalize_text(item.source_text);
        std::string text_target = uni::normalize_text(item.target_text);
        std::string answer_source = uni::normalize_text(item.answer_source);
        std::string answer_target = uni::normalize_text(item.answer_target);
        if (text_source.empty() || text_target.empty()) {
            result.warnings.push_back({item.number, "missing a language side"});
            continue;
        }
        if (!item.has_answer || (answer_source.empty() && answer_target.empty())) {
            result.warnings.push_back({item.number, "missing answer"});
            continue;
        }
        if (!uni::script_matches_language(text_target, pair.target)) {
            result.warnings.push_back(
                {item.number, std::string("target side is not ") + std::string(to_code(pair.target)) +
                                  " by dominant script"});
            continue;
        }
        BilingualRiddle riddle;
        riddle.index = static_cast<int>(result.riddles.size());
        riddle.text_source = std::move(text_source);
        riddle.text_target = std::move(text_target);
        riddle.answer_source = std::move(answer_source);
        riddle.answer_target = std::move(answer_target);
        result.riddles.push_back(std::move(riddle));
    }

    const size_t minimum = (expected_batch + 1) / 2;
    if (result.riddles.size() < minimum)
        throw ParseFailure("parse failure: " + std::to_string(result.riddles.size()) +
                               " well-formed riddles, need at least " + std::to_string(minimum) +
                               " of " + std::to_string(expected_batch),
                           result.riddles.size(), expected_batch);
    return result;
}

} // namespace aof::genclient
