#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aof/corpus.hpp"
#include "aof/embed.hpp"
#include "aof/filter.hpp"
#include "aof/genclient.hpp"
#include "aof/metrics.hpp"
#include "aof/prompt.hpp"

namespace aof::experiment {

struct ExperimentConfig {
    std::filesystem::path corpus_path;
    corpus::CorpusFormat corpus_format = corpus::CorpusFormat::jsonl;
    corpus::CsvColumnMap csv_columns;
    size_t sample_per_language = 0; // 0: whole corpus as the reference set

    std::vector<Language> languages; // target languages
    std::vector<prompt::Strategy> strategies;
    std::vector<genclient::GenerationConfig> models;

    filter::FilterConfig filter = filter::FilterConfig::defaults();
    metrics::MetricConfig metrics;
    embed::EmbeddingProviderConfig embedding;

    size_t batch_size = 10;
    int batches_per_cell = 1;
    uint64_t seed = 0;
    size_t few_shot_exemplars = 3;

    std::filesystem::path output_dir;
    std::filesystem::path prompt_dir = "assets/prompts";
    std::optional<std::filesystem::path> replay_dir;
    std::optional<std::filesystem::path> embedding_cache;
    int workers = 0; // 0: min(cell count, 4)

    // JSON document; string values support "${env:NAME}" interpolation.
    // Input paths resolve relative to the config file's directory.
    static ExperimentConfig from_file(const std::filesystem::path& file);
    void validate() const;
};

struct CellOutcome {
    metrics::CellKey cell;
    bool ok = false;
    std::string message;
    std::filesystem::path dir;
};

struct GenerateResult {
    std::vector<CellOutcome> cells;
    std::filesystem::path run_dir;

    bool all_ok() const;
};

std::string cell_dir_name(const metrics::CellKey& cell);

// One artifact directory per (strategy, language pair, model) cell:
// batch.jsonl, trace.jsonl, transcript.jsonl, cell.json. Cells run with
// bounded parallelism and fail independently. Non-AOF strategies skip the
// novelty filter (single generator call, no retries) but their traces still
// carry novelty scores and constraint diagnostics.
GenerateResult run_generate(const ExperimentConfig& config);

// Reads a generated run directory, computes the metric suite per ok cell
// (headline Self-BLEU/Distinct-2 on the target-language side) and writes
// report.csv and report.md. Throws when the run is empty or a cell claims
// success but lacks artifacts.
std::vector<metrics::MetricReport> run_evaluate(const std::filesystem::path& run_dir);

struct SweepRow {
    std::string model_id;
    double theta = 0.0;
    double self_bleu = 0.0;
    double distinct_2 = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<CellOutcome> failures;
    std::filesystem::path sweep_dir;
};

// One generate+evaluate run per theta over identical fixtures, aggregated
// per model over its AOF cells; writes sweep.csv and sweep.md.
SweepResult run_sweep(const ExperimentConfig& config, const std::vector<double>& thetas);

} // namespace aof::experiment
