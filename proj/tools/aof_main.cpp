// Command-line front end: generate riddle batches through the originality
// filter, evaluate runs into report tables, sweep the novelty threshold, and
// validate reference corpora.
//
// Exit codes: 0 success, 1 partial/cell failure, 2 configuration error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aof/error.hpp"
#include "aof/experiment.hpp"
#include "aof/report.hpp"

namespace {

using namespace aof;

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitConfigError = 2;

experiment::ExperimentConfig load_config(const std::string& config_path,
                                         const std::string& out_dir,
                                         const std::string& replay_dir,
                                         std::optional<uint64_t> seed) {
    experiment::ExperimentConfig config = experiment::ExperimentConfig::from_file(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!replay_dir.empty()) config.replay_dir = replay_dir;
    if (seed) config.seed = *seed;
    return config;
}

int cmd_generate(const experiment::ExperimentConfig& config) {
    experiment::GenerateResult result = experiment::run_generate(config);
    for (const auto& cell : result.cells) {
        std::cout << (cell.ok ? "[ok]     " : "[failed] ") << experiment::cell_dir_name(cell.cell);
        if (!cell.ok) std::cout << " — " << cell.message;
        std::cout << "\n";
    }
    std::cout << "run directory: " << result.run_dir.string() << "\n";
    return result.all_ok() ? kExitOk : kExitPartialFailure;
}

int cmd_evaluate(const std::string& run_dir) {
    std::vector<metrics::MetricReport> rows = experiment::run_evaluate(run_dir);
    std::cout << report::to_markdown(rows);
    std::cout << "\nwrote " << run_dir << "/report.csv and " << run_dir << "/report.md\n";
    return kExitOk;
}

int cmd_sweep(const experiment::ExperimentConfig& config, const std::vector<double>& thetas) {
    experiment::SweepResult result = experiment::run_sweep(config, thetas);
    for (const auto& row : result.rows) {
        char line[160];
        std::snprintf(line, sizeof line, "%s  theta=%.2f  self_bleu=%.3f  distinct_2=%.3f",
                      row.model_id.c_str(), row.theta, row.self_bleu, row.distinct_2);
        std::cout << line << "\n";
    }
    for (const auto& cell : result.failures)
        std::cout << "[failed] " << experiment::cell_dir_name(cell.cell) << " — " << cell.message
                  << "\n";
    std::cout << "wrote " << result.sweep_dir.string() << "/sweep.csv\n";
    return result.failures.empty() ? kExitOk : kExitPartialFailure;
}

int cmd_validate(const std::string& corpus_path, const std::string& format) {
    corpus::CorpusFormat fmt =
        format == "csv" ? corpus::CorpusFormat::csv : corpus::CorpusFormat::jsonl;
    corpus::CorpusDiagnostics diag = corpus::scan_corpus(corpus_path, fmt);
    for (const auto& [lang, count] : diag.corpus.counts_by_language())
        std::cout << to_code(lang) << ": " << count << " records\n";
    std::cout << "duplicates dropped: " << diag.duplicates_dropped << "\n";
    if (!diag.malformed.empty()) {
        std::cout << "malformed records:\n";
        for (const auto& m : diag.malformed)
            std::cout << "  line " << m.line << ": " << m.message << "\n";
        return kExitPartialFailure;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Originality-filtered bilingual riddle generation and evaluation"};
    app.require_subcommand(1);

    std::string config_path, out_dir, replay_dir, run_dir;
    std::string corpus_path, corpus_format = "jsonl";
    std::vector<double> thetas;
    std::optional<uint64_t> seed;

    CLI::App* generate = app.add_subcommand("generate", "Run generation cells into a run directory");
    generate->add_option("--config", config_path, "Experiment config file")->required();
    generate->add_option("--out", out_dir, "Output run directory (overrides config)");
    generate->add_option("--replay", replay_dir, "Replay fixture directory (overrides config)");
    generate->add_option("--seed", seed, "Top-level seed (overrides config)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Compute metric reports for a run");
    evaluate->add_option("run_dir", run_dir, "Run directory produced by generate")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "Evaluate a grid of novelty thresholds");
    sweep->add_option("--config", config_path, "Experiment config file")->required();
    sweep->add_option("--theta", thetas, "Threshold (repeatable)")->required();
    sweep->add_option("--out", out_dir, "Output sweep directory (overrides config)");
    sweep->add_option("--replay", replay_dir, "Replay fixture directory (overrides config)");
    sweep->add_option("--seed", seed, "Top-level seed (overrides config)");

    CLI::App* validate = app.add_subcommand("validate", "Check a reference corpus file");
    validate->add_option("corpus", corpus_path, "Corpus file (JSONL or CSV)")->required();
    validate->add_option("--format", corpus_format, "jsonl or csv")
        ->check(CLI::IsMember({"jsonl", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError; // --help exits 0
    }

    try {
        if (generate->parsed())
            return cmd_generate(load_config(config_path, out_dir, replay_dir, seed));
        if (evaluate->parsed()) return cmd_evaluate(run_dir);
        if (sweep->parsed())
            return cmd_sweep(load_config(config_path, out_dir, replay_dir, seed), thetas);
        if (validate->parsed()) return cmd_validate(corpus_path, corpus_format);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartialFailure;
    }
    return kExitConfigError;
}
