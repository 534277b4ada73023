#include "aof/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aof/error.hpp"
#include "aof/rng.hpp"
#include "aof/unicode.hpp"

namespace aof::corpus {
namespace {

using nlohmann::json;

std::string location(const std::filesystem::path& path, size_t line) {
    return path.string() + ":" + std::to_string(line);
}

// Parses one JSONL object into a record. Throws aof::Error with a message
// that the caller prefixes with the line location.
RiddleRecord record_from_json(const json& obj) {
    if (!obj.is_object()) throw Error("record is not a JSON object");

    RiddleRecord rec;
    if (obj.contains("id") && obj["id"].is_string()) rec.id = obj["id"].get<std::string>();
    else if (obj.contains("id") && obj["id"].is_number_integer())
        rec.id = std::to_string(obj["id"].get<int64_t>());
    else throw Error("missing string field 'id'");

    std::string lang_code;
    if (obj.contains("language") && obj["language"].is_string())
        lang_code = obj["language"].get<std::string>();
    else if (obj.contains("lang") && obj["lang"].is_string())
        lang_code = obj["lang"].get<std::string>();
    else throw Error("missing field 'language' in record '" + rec.id + "'");
    auto lang = parse_language(lang_code);
    if (!lang)
        throw Error("unsupported language code '" + lang_code + "' in record '" + rec.id + "'");
    rec.language = *lang;

    if (obj.contains("text") && obj["text"].is_string()) rec.text = obj["text"].get<std::string>();
    else if (obj.contains("riddle") && obj["riddle"].is_string())
        rec.text = obj["riddle"].get<std::string>();
    else throw Error("missing field 'text' in record '" + rec.id + "'");

    // Answer is either a string, or an index into an options array
    // (multiple-choice shape).
    const json* options = nullptr;
    if (obj.contains("options") && obj["options"].is_array()) options = &obj["options"];
    else if (obj.contains("choices") && obj["choices"].is_array()) options = &obj["choices"];

    if (obj.contains("answer") && obj["answer"].is_string()) {
        rec.answer = obj["answer"].get<std::string>();
    } else {
        int64_t index = -1;
        if (obj.contains("answer") && obj["answer"].is_number_integer())
            index = obj["answer"].get<int64_t>();
        else if (obj.contains("label") && obj["label"].is_number_integer())
            index = obj["label"].get<int64_t>();
        if (index < 0 || options == nullptr)
            throw Error("missing field 'answer' in record '" + rec.id + "'");
        if (index >= static_cast<int64_t>(options->size()))
            throw Error("answer index out of range in record '" + rec.id + "'");
        for (int64_t i = 0; i < static_cast<int64_t>(options->size()); ++i) {
            const json& opt = (*options)[static_cast<size_t>(i)];
            if (!opt.is_string())
                throw Error("non-string option in record '" + rec.id + "'");
            if (i == index) rec.answer = opt.get<std::string>();
            else rec.distractors.push_back(uni::normalize_text(opt.get<std::string>()));
        }
    }

    if (options != nullptr && rec.distractors.empty() && obj.contains("answer") &&
        obj["answer"].is_string()) {
        for (const json& opt : *options)
            if (opt.is_string() && opt.get<std::string>() != rec.answer)
                rec.distractors.push_back(uni::normalize_text(opt.get<std::string>()));
    }

    if (obj.contains("distractors") && obj["distractors"].is_array()) {
        rec.distractors.clear();
        for (const json& d : obj["distractors"]) {
            if (!d.is_string()) throw Error("non-string distractor in record '" + rec.id + "'");
            rec.distractors.push_back(uni::normalize_text(d.get<std::string>()));
        }
    }

    rec.text = uni::normalize_text(rec.text);
    rec.answer = uni::normalize_text(rec.answer);
    if (rec.text.empty()) throw Error("empty text after normalization in record '" + rec.id + "'");
    return rec;
}

// Minimal RFC-4180 CSV row reader. Returns false at EOF.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, size_t& line_no) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') line_no++;
                field.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch == '\n') {
            if (!field.empty() || !fields.empty()) fields.push_back(field);
            line_no++;
            return true;
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    if (!any) return false;
    if (!field.empty() || !fields.empty()) fields.push_back(field);
    line_no++;
    return !fields.empty();
}

std::vector<std::string> split_pipe(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, '|'))
        if (!cur.empty()) out.push_back(uni::normalize_text(cur));
    return out;
}

template <typename OnRecord, typename OnError>
void scan_jsonl(const std::filesystem::path& path, OnRecord&& on_record, OnError&& on_error) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json obj = json::parse(line);
            on_record(record_from_json(obj), line_no);
        } catch (const json::exception& e) {
            on_error(line_no, std::string("invalid JSON: ") + e.what());
        } catch (const Error& e) {
            on_error(line_no, e.what());
        }
    }
}

template <typename OnRecord, typename OnError>
void scan_csv(const std::filesystem::path& path, const CsvColumnMap& columns, OnRecord&& on_record,
              OnError&& on_error) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path.string());
    size_t line_no = 0;
    std::vector<std::string> header;
    if (!read_csv_row(in, header, line_no)) throw Error("empty CSV file: " + path.string());

    auto col = [&](const std::string& name) -> int {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int c_id = col(columns.id), c_lang = col(columns.language), c_text = col(columns.text),
              c_answer = col(columns.answer), c_distractors = col(columns.distractors);
    if (c_id < 0 || c_lang < 0 || c_text < 0 || c_answer < 0)
        throw Error("CSV header missing required columns (" + columns.id + ", " + columns.language +
                    ", " + columns.text + ", " + columns.answer + ") in " + path.string());

    std::vector<std::string> row;
    while (read_csv_row(in, row, line_no)) {
        const size_t record_line = line_no;
        auto get = [&](int idx) -> std::string {
            return (idx >= 0 && static_cast<size_t>(idx) < row.size()) ? row[static_cast<size_t>(idx)]
                                                                       : std::string();
        };
        try {
            RiddleRecord rec;
            rec.id = get(c_id);
            if (rec.id.empty()) throw Error("missing id");
            auto lang = parse_language(get(c_lang));
            if (!lang)
                throw Error("unsupported language code '" + get(c_lang) + "' in record '" + rec.id +
                            "'");
            rec.language = *lang;
            rec.text = uni::normalize_text(get(c_text));
            rec.answer = uni::normalize_text(get(c_answer));
            if (rec.text.empty())
                throw Error("empty text after normalization in record '" + rec.id + "'");
            if (c_distractors >= 0) rec.distractors = split_pipe(get(c_distractors));
            on_record(std::move(rec), record_line);
        } catch (const Error& e) {
            on_error(record_line, e.what());
        }
    }
}

struct Dedup {
    std::set<std::pair<Language, std::string>> seen_texts;
    std::set<std::string> seen_ids;
    size_t dropped = 0;

    // Returns true when the record should be kept. Duplicate ids are
    // malformed input, not dedup.
    bool keep(const RiddleRecord& rec) {
        if (!seen_ids.insert(rec.id).second)
            throw Error("duplicate record id '" + rec.id + "'");
        if (!seen_texts.insert({rec.language, rec.text}).second) {
            dropped++;
            return false;
        }
        return true;
    }
};

} // namespace

std::map<Language, size_t> ReferenceCorpus::counts_by_language() const {
    std::map<Language, size_t> counts;
    for (const auto& rec : records) counts[rec.language]++;
    return counts;
}

CorpusLoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format,
                             const CsvColumnMap& columns) {
    CorpusLoadResult result;
    Dedup dedup;
    auto on_record = [&](RiddleRecord rec, size_t) {
        if (dedup.keep(rec)) result.corpus.records.push_back(std::move(rec));
    };
    auto on_error = [&](size_t line, const std::string& msg) {
        throw Error("malformed record at " + location(path, line) + ": " + msg);
    };
    if (format == CorpusFormat::jsonl) scan_jsonl(path, on_record, on_error);
    else scan_csv(path, columns, on_record, on_error);
    result.duplicates_dropped = dedup.dropped;
    return result;
}

CorpusDiagnostics scan_corpus(const std::filesystem::path& path, CorpusFormat format,
                              const CsvColumnMap& columns) {
    CorpusDiagnostics diag;
    Dedup dedup;
    auto on_record = [&](RiddleRecord rec, size_t line) {
        try {
            if (dedup.keep(rec)) diag.corpus.records.push_back(std::move(rec));
        } catch (const Error& e) {
            diag.malformed.push_back({line, e.what()});
        }
    };
    auto on_error = [&](size_t line, const std::string& msg) {
        diag.malformed.push_back({line, msg});
    };
    if (format == CorpusFormat::jsonl) scan_jsonl(path, on_record, on_error);
    else scan_csv(path, columns, on_record, on_error);
    diag.duplicates_dropped = dedup.dropped;
    return diag;
}

ReferenceCorpus sample_balanced(const ReferenceCorpus& corpus, size_t per_language, uint64_t seed) {
    std::map<Language, std::vector<const RiddleRecord*>> strata;
    for (const auto& rec : corpus.records) strata[rec.language].push_back(&rec);

    for (const auto& [lang, records] : strata)
        if (records.size() < per_language)
            throw Error("stratum too small for language '" + std::string(to_code(lang)) + "': has " +
                        std::to_string(records.size()) + ", need " + std::to_string(per_language));

    ReferenceCorpus out;
    for (auto& [lang, records] : strata) {
        uint64_t state = rng::derive_seed(seed, std::string("sample:") + std::string(to_code(lang)));
        rng::shuffle(records, state);
        for (size_t i = 0; i < per_language; ++i) out.records.push_back(*records[i]);
    }
    return out;
}

} // namespace aof::corpus
