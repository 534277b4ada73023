#include "aof/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "aof/error.hpp"
#include "aof/report.hpp"
#include "aof/rng.hpp"

namespace aof::experiment {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

void interpolate_env(json& node) {
    if (node.is_object() || node.is_array()) {
        for (json& child : node) interpolate_env(child);
        return;
    }
    if (!node.is_string()) return;
    std::string value = node.get<std::string>();
    size_t begin;
    while ((begin = value.find("${env:")) != std::string::npos) {
        size_t end = value.find('}', begin);
        if (end == std::string::npos)
            throw ConfigError("unterminated ${env:...} in config value: " + value);
        std::string name = value.substr(begin + 6, end - begin - 6);
        const char* env = std::getenv(name.c_str());
        if (env == nullptr)
            throw ConfigError("config references unset environment variable '" + name + "'");
        value = value.substr(0, begin) + env + value.substr(end + 1);
    }
    node = value;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

corpus::CorpusFormat parse_format(const std::string& s) {
    if (s == "jsonl") return corpus::CorpusFormat::jsonl;
    if (s == "csv") return corpus::CorpusFormat::csv;
    throw ConfigError("unknown corpus format '" + s + "' (expected jsonl or csv)");
}

metrics::TokenizerMode parse_tokenizer(const std::string& s) {
    if (s == "auto") return metrics::TokenizerMode::automatic;
    if (s == "whitespace") return metrics::TokenizerMode::whitespace;
    if (s == "character") return metrics::TokenizerMode::character;
    throw ConfigError("unknown tokenization mode '" + s + "'");
}

filter::FilterConfig parse_filter(const json& obj) {
    filter::FilterConfig f = filter::FilterConfig::defaults();
    f.theta = obj.value("theta", f.theta);
    f.max_attempts = obj.value("max_attempts", f.max_attempts);
    f.include_accepted_in_reference =
        obj.value("include_accepted_in_reference", f.include_accepted_in_reference);
    f.closure_quota = obj.value("closure_quota", f.closure_quota);
    if (obj.contains("banned_openers"))
        f.banned_openers = obj["banned_openers"].get<std::vector<std::string>>();
    auto parse_lang_map = [](const json& m, auto& dest, auto convert) {
        dest.clear();
        for (auto it = m.begin(); it != m.end(); ++it) {
            auto lang = parse_language(it.key());
            if (!lang) throw ConfigError("unknown language '" + it.key() + "' in filter config");
            dest[*lang] = convert(it.value());
        }
    };
    if (obj.contains("banned_answers"))
        parse_lang_map(obj["banned_answers"], f.banned_answers, [](const json& v) {
            std::set<std::string> out;
            for (const json& s : v) out.insert(s.get<std::string>());
            return out;
        });
    if (obj.contains("banned_openers_by_language"))
        parse_lang_map(obj["banned_openers_by_language"], f.banned_openers_by_language,
                       [](const json& v) { return v.get<std::vector<std::string>>(); });
    if (obj.contains("closure_patterns"))
        parse_lang_map(obj["closure_patterns"], f.closure_patterns,
                       [](const json& v) { return v.get<std::vector<std::string>>(); });
    return f;
}

json filter_to_json(const filter::FilterConfig& f) {
    json banned_answers = json::object();
    for (const auto& [lang, words] : f.banned_answers)
        banned_answers[std::string(to_code(lang))] = words;
    json openers_by_lang = json::object();
    for (const auto& [lang, list] : f.banned_openers_by_language)
        openers_by_lang[std::string(to_code(lang))] = list;
    json closures = json::object();
    for (const auto& [lang, list] : f.closure_patterns)
        closures[std::string(to_code(lang))] = list;
    return {{"theta", f.theta},
            {"max_attempts", f.max_attempts},
            {"include_accepted_in_reference", f.include_accepted_in_reference},
            {"banned_answers", banned_answers},
            {"banned_openers", f.banned_openers},
            {"banned_openers_by_language", openers_by_lang},
            {"closure_patterns", closures},
            {"closure_quota", f.closure_quota}};
}

embed::EmbeddingProviderConfig parse_embedding(const json& obj) {
    embed::EmbeddingProviderConfig e;
    std::string kind = obj.value("kind", "deterministic");
    if (kind == "http") e.kind = embed::ProviderKind::http;
    else if (kind == "deterministic") e.kind = embed::ProviderKind::deterministic;
    else throw ConfigError("unknown embedding provider kind '" + kind + "'");
    e.model_id = obj.value("model_id", e.model_id);
    e.endpoint = obj.value("endpoint", e.endpoint);
    e.dimension = obj.value("dimension", e.dimension);
    e.api_key_env = obj.value("api_key_env", e.api_key_env);
    e.retry_attempts = obj.value("retry_attempts", e.retry_attempts);
    e.retry_backoff_ms = obj.value("retry_backoff_ms", e.retry_backoff_ms);
    return e;
}

json embedding_to_json(const embed::EmbeddingProviderConfig& e) {
    return {{"kind", e.kind == embed::ProviderKind::http ? "http" : "deterministic"},
            {"model_id", e.model_id},
            {"endpoint", e.endpoint},
            {"dimension", e.dimension},
            {"api_key_env", e.api_key_env},
            {"retry_attempts", e.retry_attempts},
            {"retry_backoff_ms", e.retry_backoff_ms}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sanitize_component(std::string_view s) {
    std::string out;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '-' || c == '_' || c == '.';
        out.push_back(ok ? c : '-');
    }
    return out;
}

std::string riddle_to_json_line(const genclient::BilingualRiddle& r) {
    json obj = {{"index", r.index},
                {"text_source", r.text_source},
                {"text_target", r.text_target},
                {"answer_source", r.answer_source},
                {"answer_target", r.answer_target}};
    return obj.dump();
}

genclient::BilingualRiddle riddle_from_json_line(const std::string& line) {
    json obj = json::parse(line);
    genclient::BilingualRiddle r;
    r.index = obj.value("index", 0);
    r.text_source = obj.value("text_source", "");
    r.text_target = obj.value("text_target", "");
    r.answer_source = obj.value("answer_source", "");
    r.answer_target = obj.value("answer_target", "");
    return r;
}

} // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) throw ConfigError("config file not found: " + file.string());
    json doc;
    try {
        doc = json::parse(read_file(file));
    } catch (const json::exception& e) {
        throw ConfigError("invalid config JSON in " + file.string() + ": " + e.what());
    }
    interpolate_env(doc);
    const std::filesystem::path base = file.has_parent_path() ? file.parent_path()
                                                              : std::filesystem::path(".");

    ExperimentConfig c;
    try {
        const json& corpus_obj = doc.at("corpus");
        c.corpus_path = resolve(base, corpus_obj.at("path").get<std::string>());
        c.corpus_format = parse_format(corpus_obj.value("format", "jsonl"));
        c.sample_per_language = corpus_obj.value("sample_per_language", size_t{0});
        if (corpus_obj.contains("columns")) {
            const json& cols = corpus_obj["columns"];
            c.csv_columns.id = cols.value("id", c.csv_columns.id);
            c.csv_columns.language = cols.value("language", c.csv_columns.language);
            c.csv_columns.text = cols.value("text", c.csv_columns.text);
            c.csv_columns.answer = cols.value("answer", c.csv_columns.answer);
            c.csv_columns.distractors = cols.value("distractors", c.csv_columns.distractors);
        }

        for (const json& lang : doc.at("languages")) {
            auto parsed = parse_language(lang.get<std::string>());
            if (!parsed || *parsed == Language::en)
                throw ConfigError("invalid target language '" + lang.get<std::string>() + "'");
            c.languages.push_back(*parsed);
        }
        for (const json& strat : doc.at("strategies")) {
            auto parsed = prompt::parse_strategy(strat.get<std::string>());
            if (!parsed) throw ConfigError("unknown strategy '" + strat.get<std::string>() + "'");
            c.strategies.push_back(*parsed);
        }
        for (const json& model : doc.at("models")) {
            genclient::GenerationConfig g;
            g.model_id = model.at("model_id").get<std::string>();
            g.temperature = model.value("temperature", g.temperature);
            g.max_tokens = model.value("max_tokens", g.max_tokens);
            g.endpoint = model.value("endpoint", g.endpoint);
            g.api_key_env = model.value("api_key_env", g.api_key_env);
            g.retry_attempts = model.value("retry_attempts", g.retry_attempts);
            g.retry_backoff_ms = model.value("retry_backoff_ms", g.retry_backoff_ms);
            c.models.push_back(std::move(g));
        }

        if (doc.contains("filter")) c.filter = parse_filter(doc["filter"]);
        if (doc.contains("metrics")) {
            const json& m = doc["metrics"];
            c.metrics.ngram_order = m.value("ngram_order", c.metrics.ngram_order);
            c.metrics.smoothing_epsilon = m.value("smoothing_epsilon", c.metrics.smoothing_epsilon);
            c.metrics.tokenization = parse_tokenizer(m.value("tokenization", "auto"));
        }
        if (doc.contains("embedding")) c.embedding = parse_embedding(doc["embedding"]);

        c.batch_size = doc.value("batch_size", c.batch_size);
        c.batches_per_cell = doc.value("batches_per_cell", c.batches_per_cell);
        c.seed = doc.value("seed", c.seed);
        c.few_shot_exemplars = doc.value("few_shot_exemplars", c.few_shot_exemplars);
        c.workers = doc.value("workers", c.workers);

        if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();
        if (doc.contains("prompt_dir"))
            c.prompt_dir = resolve(base, doc["prompt_dir"].get<std::string>());
        if (doc.contains("replay_dir") && doc["replay_dir"].is_string())
            c.replay_dir = resolve(base, doc["replay_dir"].get<std::string>());
        if (doc.contains("embedding_cache") && doc["embedding_cache"].is_string())
            c.embedding_cache = resolve(base, doc["embedding_cache"].get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError("config " + file.string() + ": " + e.what());
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (languages.empty()) throw ConfigError("config: no target languages");
    if (strategies.empty()) throw ConfigError("config: no strategies");
    if (models.empty()) throw ConfigError("config: no models");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (batches_per_cell < 1) throw ConfigError("config: batches_per_cell must be >= 1");
    if (output_dir.empty()) throw ConfigError("config: output_dir is required");
    const bool uses_few_shot = std::any_of(strategies.begin(), strategies.end(), [](auto s) {
        return s == prompt::Strategy::few_shot;
    });
    if (uses_few_shot && (few_shot_exemplars < 3 || few_shot_exemplars > 5))
        throw ConfigError("config: few_shot_exemplars must be in [3, 5], got " +
                          std::to_string(few_shot_exemplars));
    filter.validate();
    metrics.validate();
    embedding.validate();
    for (const auto& model : models) model.validate();
}

bool GenerateResult::all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellOutcome& c) { return c.ok; });
}

std::string cell_dir_name(const metrics::CellKey& cell) {
    return cell.strategy + "__" + pair_code(cell.pair) + "__" + sanitize_component(cell.model_id);
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct CellPlan {
    prompt::Strategy strategy;
    LanguagePair pair;
    genclient::GenerationConfig model;
    metrics::CellKey key;
    uint64_t seed = 0;
};

struct CellContext {
    const ExperimentConfig* config;
    const corpus::ReferenceCorpus* reference_corpus;
    const prompt::TemplateStore* templates;
    embed::Embedder* embedder;
};

// Non-AOF strategies: one generator call, no novelty rejection. The trace
// still records the novelty score and constraint diagnostics per riddle, but
// `accepted` reflects pipeline acceptance (always true), not the filter
// predicate.
std::vector<filter::FilterDecision> diagnose_batch(
    const std::vector<genclient::BilingualRiddle>& riddles, LanguagePair pair,
    const filter::ReferenceIndex& references, embed::Embedder& embedder,
    const filter::FilterConfig& config, int attempt) {
    std::vector<filter::FilterDecision> decisions;
    std::vector<std::string> batch_violations = filter::check_batch_constraints(riddles, config);
    for (const auto& riddle : riddles) {
        filter::FilterDecision d;
        d.attempt = attempt;
        d.riddle_index = riddle.index;
        auto src = filter::novelty_score(embedder.embed(riddle.text_source),
                                         references.references(pair.source));
        auto tgt = filter::novelty_score(embedder.embed(riddle.text_target),
                                         references.references(pair.target));
        if (tgt.score > src.score) {
            d.score = tgt.score;
            d.nearest_reference_id = tgt.nearest_id;
        } else {
            d.score = src.score;
            d.nearest_reference_id = src.nearest_id;
        }
        d.violations = filter::check_riddle_constraints(riddle, pair, config);
        for (const std::string& v : batch_violations) d.violations.push_back(v);
        d.accepted = true;
        decisions.push_back(std::move(d));
    }
    return decisions;
}

CellOutcome run_cell(const CellPlan& plan, const CellContext& ctx) {
    const ExperimentConfig& config = *ctx.config;
    CellOutcome outcome;
    outcome.cell = plan.key;
    outcome.dir = config.output_dir / cell_dir_name(plan.key);

    std::filesystem::create_directories(outcome.dir);
    genclient::TranscriptWriter transcripts(outcome.dir / "transcript.jsonl");

    std::unique_ptr<genclient::Generator> generator;
    if (config.replay_dir) {
        generator = std::make_unique<genclient::ReplayGenerator>(
            *config.replay_dir / (cell_dir_name(plan.key) + ".jsonl"), &transcripts);
    } else {
        if (plan.model.endpoint.empty())
            throw ConfigError("model '" + plan.model.model_id +
                              "' has no endpoint and no replay fixture");
        generator = std::make_unique<genclient::HttpGenerator>(plan.model, &transcripts);
    }

    // Few-shot exemplars come from the English stratum and leave the
    // reference set for this cell, so imitating them is not penalized.
    prompt::PromptSpec spec;
    spec.strategy = plan.strategy;
    spec.pair = plan.pair;
    spec.batch_size = config.batch_size;
    spec.constraints = config.filter;
    std::set<std::string> excluded_ids;
    if (plan.strategy == prompt::Strategy::few_shot) {
        corpus::ReferenceCorpus english;
        for (const auto& rec : ctx.reference_corpus->records)
            if (rec.language == Language::en) english.records.push_back(rec);
        corpus::ReferenceCorpus sampled =
            corpus::sample_balanced(english, config.few_shot_exemplars, plan.seed);
        for (const auto& rec : sampled.records) {
            spec.exemplars.push_back({rec.text, rec.answer});
            excluded_ids.insert(rec.id);
        }
    }
    const std::string rendered_prompt = ctx.templates->render(spec);

    corpus::ReferenceCorpus cell_corpus;
    for (const auto& rec : ctx.reference_corpus->records)
        if (!excluded_ids.count(rec.id)) cell_corpus.records.push_back(rec);
    filter::ReferenceIndex references = filter::ReferenceIndex::build(cell_corpus, *ctx.embedder);

    std::vector<genclient::BilingualRiddle> accepted;
    std::vector<filter::FilterDecision> trace;
    std::vector<genclient::ParseWarning> warnings;
    int attempts_used = 0;
    std::string failure;

    for (int batch_index = 0; batch_index < config.batches_per_cell && failure.empty();
         ++batch_index) {
        if (plan.strategy == prompt::Strategy::aof) {
            filter::AofOutcome result =
                filter::aof_generate(rendered_prompt, *generator, plan.pair, config.batch_size,
                                     references, *ctx.embedder, config.filter);
            attempts_used += result.attempts_used;
            for (auto& d : result.trace) trace.push_back(std::move(d));
            if (!result.batch) {
                failure = "no accepted batch within " + std::to_string(config.filter.max_attempts) +
                          " attempts";
                break;
            }
            for (auto& r : *result.batch) accepted.push_back(std::move(r));
        } else {
            std::string raw = generator->generate(rendered_prompt);
            attempts_used += 1;
            genclient::ParsedBatch parsed;
            try {
                parsed = genclient::parse_riddles(raw, plan.pair, config.batch_size);
            } catch (const ParseFailure& e) {
                filter::FilterDecision d;
                d.attempt = attempts_used;
                d.riddle_index = -1;
                d.violations = {filter::kParseFailureLabel};
                trace.push_back(std::move(d));
                failure = e.what();
                break;
            }
            for (auto& w : parsed.warnings) warnings.push_back(std::move(w));
            std::vector<filter::FilterDecision> decisions = diagnose_batch(
                parsed.riddles, plan.pair, references, *ctx.embedder, config.filter, attempts_used);
            for (auto& d : decisions) trace.push_back(std::move(d));
            for (auto& r : parsed.riddles) accepted.push_back(std::move(r));
        }
    }

    std::string batch_lines;
    for (const auto& riddle : accepted) batch_lines += riddle_to_json_line(riddle) + "\n";
    if (failure.empty()) write_file(outcome.dir / "batch.jsonl", batch_lines);
    write_file(outcome.dir / "trace.jsonl", filter::trace_to_jsonl(trace));

    json warnings_json = json::array();
    for (const auto& w : warnings)
        warnings_json.push_back({{"item", w.item_number}, {"reason", w.reason}});
    json cell_json = {{"strategy", plan.key.strategy},
                      {"language_pair", pair_code(plan.pair)},
                      {"model", plan.key.model_id},
                      {"theta", config.filter.theta},
                      {"seed", plan.seed},
                      {"batch_size", config.batch_size},
                      {"batches_per_cell", config.batches_per_cell},
                      {"status", failure.empty() ? "ok" : "failed"},
                      {"message", failure},
                      {"attempts_used", attempts_used},
                      {"accepted_count", accepted.size()},
                      {"parse_warnings", warnings_json}};
    write_file(outcome.dir / "cell.json", cell_json.dump(2) + "\n");

    outcome.ok = failure.empty();
    outcome.message = failure;
    return outcome;
}

json config_echo(const ExperimentConfig& config) {
    json strategies = json::array();
    for (prompt::Strategy s : config.strategies)
        strategies.push_back(std::string(prompt::strategy_code(s)));
    json languages = json::array();
    for (Language lang : config.languages) languages.push_back(std::string(to_code(lang)));
    json models = json::array();
    for (const auto& m : config.models)
        models.push_back({{"model_id", m.model_id},
                          {"endpoint", m.endpoint},
                          {"api_key_env", m.api_key_env},
                          {"temperature", m.temperature},
                          {"max_tokens", m.max_tokens}});
    return {{"corpus",
             {{"path", config.corpus_path.string()},
              {"format", config.corpus_format == corpus::CorpusFormat::jsonl ? "jsonl" : "csv"},
              {"sample_per_language", config.sample_per_language}}},
            {"languages", languages},
            {"strategies", strategies},
            {"models", models},
            {"filter", filter_to_json(config.filter)},
            {"metrics",
             {{"ngram_order", config.metrics.ngram_order},
              {"smoothing_epsilon", config.metrics.smoothing_epsilon},
              {"tokenization",
               config.metrics.tokenization == metrics::TokenizerMode::automatic ? "auto"
               : config.metrics.tokenization == metrics::TokenizerMode::whitespace
                   ? "whitespace"
                   : "character"}}},
            {"embedding", embedding_to_json(config.embedding)},
            {"batch_size", config.batch_size},
            {"batches_per_cell", config.batches_per_cell},
            {"seed", config.seed},
            {"few_shot_exemplars", config.few_shot_exemplars},
            {"replay", config.replay_dir.has_value()}};
}

} // namespace

GenerateResult run_generate(const ExperimentConfig& config) {
    config.validate();
    if (config.replay_dir && !std::filesystem::is_directory(*config.replay_dir))
        throw ConfigError("replay directory not found: " + config.replay_dir->string());
    GenerateResult result;
    result.run_dir = config.output_dir;
    std::filesystem::create_directories(config.output_dir);

    corpus::CorpusLoadResult loaded =
        corpus::load_corpus(config.corpus_path, config.corpus_format, config.csv_columns);
    corpus::ReferenceCorpus reference = std::move(loaded.corpus);
    if (config.sample_per_language > 0)
        reference = corpus::sample_balanced(reference, config.sample_per_language,
                                            rng::derive_seed(config.seed, "corpus-sample"));

    embed::Embedder embedder(config.embedding, config.embedding_cache);
    prompt::TemplateStore templates(config.prompt_dir);

    std::vector<CellPlan> plans;
    for (prompt::Strategy strategy : config.strategies)
        for (Language target : config.languages)
            for (const auto& model : config.models) {
                CellPlan plan;
                plan.strategy = strategy;
                plan.pair = LanguagePair{Language::en, target};
                plan.model = model;
                plan.key = {std::string(prompt::strategy_code(strategy)), plan.pair, model.model_id};
                plan.seed = rng::derive_seed(config.seed, cell_dir_name(plan.key));
                plans.push_back(std::move(plan));
            }

    write_file(config.output_dir / "run_config.json", config_echo(config).dump(2) + "\n");

    CellContext ctx{&config, &reference, &templates, &embedder};
    result.cells.resize(plans.size());

    const size_t worker_count =
        config.workers > 0 ? static_cast<size_t>(config.workers)
                           : std::min<size_t>(plans.size(), 4);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= plans.size()) return;
            try {
                result.cells[i] = run_cell(plans[i], ctx);
            } catch (const std::exception& e) {
                result.cells[i].cell = plans[i].key;
                result.cells[i].dir = config.output_dir / cell_dir_name(plans[i].key);
                result.cells[i].ok = false;
                result.cells[i].message = e.what();
            }
        }
    };
    std::vector<std::thread> threads;
    for (size_t i = 0; i < worker_count; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();

    return result;
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<metrics::MetricReport> run_evaluate(const std::filesystem::path& run_dir) {
    const std::filesystem::path config_file = run_dir / "run_config.json";
    if (!std::filesystem::exists(config_file))
        throw Error("not a run directory (missing run_config.json): " + run_dir.string());
    json run_config = json::parse(read_file(config_file));

    metrics::MetricConfig metric_config;
    if (run_config.contains("metrics")) {
        const json& m = run_config["metrics"];
        metric_config.ngram_order = m.value("ngram_order", metric_config.ngram_order);
        metric_config.smoothing_epsilon =
            m.value("smoothing_epsilon", metric_config.smoothing_epsilon);
        metric_config.tokenization = parse_tokenizer(m.value("tokenization", "auto"));
    }
    embed::EmbeddingProviderConfig embedding = parse_embedding(run_config.at("embedding"));
    embed::Embedder embedder(embedding, std::nullopt);
    metrics::HeuristicValidator validator;

    std::vector<std::filesystem::path> cell_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(run_dir))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "cell.json"))
            cell_dirs.push_back(entry.path());
    std::sort(cell_dirs.begin(), cell_dirs.end());
    if (cell_dirs.empty()) throw Error("no cells found in run directory: " + run_dir.string());

    std::vector<metrics::MetricReport> rows;
    for (const std::filesystem::path& dir : cell_dirs) {
        json cell = json::parse(read_file(dir / "cell.json"));
        const std::string cell_name = dir.filename().string();
        if (cell.value("status", "") != "ok") continue; // failed cells carry no batch

        auto pair = parse_pair(cell.at("language_pair").get<std::string>());
        if (!pair) throw Error("cell " + cell_name + ": bad language_pair in cell.json");

        const std::filesystem::path batch_file = dir / "batch.jsonl";
        if (!std::filesystem::exists(batch_file))
            throw Error("cell " + cell_name + ": missing batch.jsonl");

        std::vector<genclient::BilingualRiddle> riddles;
        std::istringstream lines(read_file(batch_file));
        std::string line;
        while (std::getline(lines, line))
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                riddles.push_back(riddle_from_json_line(line));
        if (riddles.empty()) throw Error("cell " + cell_name + ": empty batch.jsonl");

        std::vector<std::string> target_texts;
        target_texts.reserve(riddles.size());
        for (const auto& r : riddles) target_texts.push_back(r.text_target);

        metrics::MetricReport row;
        row.cell = {cell.at("strategy").get<std::string>(), *pair,
                    cell.at("model").get<std::string>()};
        try {
            row.self_bleu = metrics::self_bleu(target_texts, pair->target, metric_config);
            row.distinct_2 =
                metrics::distinct_n(target_texts, pair->target, 2, metric_config.tokenization);
            row.mean_token_length =
                metrics::mean_token_length(target_texts, pair->target, metric_config.tokenization);
            row.alignment = metrics::alignment_score(riddles, embedder);
            row.validity_fraction = metrics::structural_validity(riddles, *pair, validator);
        } catch (const Error& e) {
            throw Error("cell " + cell_name + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("no evaluable cells in run directory: " + run_dir.string());

    write_file(run_dir / "report.csv", report::to_csv(rows));
    write_file(run_dir / "report.md", report::to_markdown(rows));
    return rows;
}

// ---------------------------------------------------------------------------
// Threshold sweep

SweepResult run_sweep(const ExperimentConfig& config, const std::vector<double>& thetas) {
    if (thetas.empty()) throw ConfigError("sweep: at least one theta is required");
    for (double theta : thetas)
        if (!(theta > 0.0) || theta > 1.0)
            throw ConfigError("sweep: theta " + std::to_string(theta) + " outside (0, 1]");
    if (std::none_of(config.strategies.begin(), config.strategies.end(),
                     [](prompt::Strategy s) { return s == prompt::Strategy::aof; }))
        throw ConfigError("sweep: config must include the aof strategy");

    SweepResult result;
    result.sweep_dir = config.output_dir;
    std::filesystem::create_directories(result.sweep_dir);

    for (double theta : thetas) {
        char label[32];
        std::snprintf(label, sizeof label, "theta_%.2f", theta);
        ExperimentConfig sub = config;
        sub.filter.theta = theta;
        sub.output_dir = config.output_dir / label;

        GenerateResult generated = run_generate(sub);
        for (const CellOutcome& cell : generated.cells)
            if (!cell.ok) result.failures.push_back(cell);

        std::vector<metrics::MetricReport> rows;
        try {
            rows = run_evaluate(sub.output_dir);
        } catch (const Error&) {
            continue; // every cell failed at this theta; failures already recorded
        }

        // aggregate per model over its aof cells
        std::map<std::string, std::pair<double, size_t>> bleu_sum, distinct_sum;
        for (const auto& row : rows) {
            if (row.cell.strategy != "aof") continue;
            bleu_sum[row.cell.model_id].first += row.self_bleu;
            bleu_sum[row.cell.model_id].second++;
            distinct_sum[row.cell.model_id].first += row.distinct_2;
            distinct_sum[row.cell.model_id].second++;
        }
        for (const auto& [model, sum] : bleu_sum) {
            SweepRow row;
            row.model_id = model;
            row.theta = theta;
            row.self_bleu = sum.first / static_cast<double>(sum.second);
            row.distinct_2 =
                distinct_sum[model].first / static_cast<double>(distinct_sum[model].second);
            result.rows.push_back(std::move(row));
        }
    }

    std::sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tie(a.model_id, a.theta) < std::tie(b.model_id, b.theta);
    });

    std::string csv = "model,theta,self_bleu,distinct_2\n";
    std::string md = "| Model | Threshold | Self-BLEU | Distinct-2 |\n|---|---|---|---|\n";
    for (const SweepRow& row : result.rows) {
        char theta_label[16];
        std::snprintf(theta_label, sizeof theta_label, "%.2f", row.theta);
        csv += row.model_id + "," + theta_label + "," + report::format3(row.self_bleu) + "," +
               report::format3(row.distinct_2) + "\n";
        md += "| " + row.model_id + " | " + theta_label + " | " + report::format3(row.self_bleu) +
              " | " + report::format3(row.distinct_2) + " |\n";
    }
    write_file(result.sweep_dir / "sweep.csv", csv);
    write_file(result.sweep_dir / "sweep.md", md);
    return result;
}

} // namespace aof::experiment
