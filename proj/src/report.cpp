#include "aof/report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <tuple>
#include <vector>

namespace aof::report {
namespace {

using metrics::MetricReport;

std::vector<const MetricReport*> sorted_rows(std::span<const MetricReport> rows) {
    std::vector<const MetricReport*> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(&row);
    std::sort(out.begin(), out.end(), [](const MetricReport* a, const MetricReport* b) {
        auto ka = std::tuple(pair_code(a->cell.pair), a->cell.strategy, a->cell.model_id);
        auto kb = std::tuple(pair_code(b->cell.pair), b->cell.strategy, b->cell.model_id);
        return ka < kb;
    });
    return out;
}

// Best combined performance: minimize Self-BLEU, tie-break by maximizing
// Distinct-2. Comparison happens on the 3-decimal rendering so the bolded
// cell is consistent with the printed numbers.
const MetricReport* best_of_pair(const std::vector<const MetricReport*>& rows) {
    auto printed = [](double v) { return std::strtod(format3(v).c_str(), nullptr); };
    const MetricReport* best = nullptr;
    for (const MetricReport* row : rows) {
        if (best == nullptr) {
            best = row;
            continue;
        }
        double rb = printed(row->self_bleu), bb = printed(best->self_bleu);
        if (rb < bb || (rb == bb && printed(row->distinct_2) > printed(best->distinct_2)))
            best = row;
    }
    return best;
}

} // namespace

std::string format3(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", value);
    return buf;
}

std::string to_csv(std::span<const MetricReport> rows) {
    std::string out =
        "language_pair,strategy,model,self_bleu,distinct_2,mean_token_length,alignment_proxy,"
        "validity_fraction\n";
    for (const MetricReport* row : sorted_rows(rows)) {
        out += pair_code(row->cell.pair) + "," + row->cell.strategy + "," + row->cell.model_id +
               "," + format3(row->self_bleu) + "," + format3(row->distinct_2) + "," +
               format3(row->mean_token_length) + "," + format3(row->alignment) + "," +
               format3(row->validity_fraction) + "\n";
    }
    return out;
}

std::string to_markdown(std::span<const MetricReport> rows) {
    std::vector<const MetricReport*> ordered = sorted_rows(rows);

    std::map<std::string, std::vector<const MetricReport*>> by_pair;
    for (const MetricReport* row : ordered) by_pair[pair_code(row->cell.pair)].push_back(row);
    std::map<std::string, const MetricReport*> best;
    for (const auto& [pair, pair_rows] : by_pair) best[pair] = best_of_pair(pair_rows);

    std::string out =
        "| Language Pair | Strategy | Model | Self-BLEU / Distinct-2 | Mean Token Length | "
        "Alignment (proxy) | Validity |\n"
        "|---|---|---|---|---|---|---|\n";
    for (const MetricReport* row : ordered) {
        const std::string pair = pair_code(row->cell.pair);
        std::string cell = format3(row->self_bleu) + " / " + format3(row->distinct_2);
        if (best[pair] == row) cell = "**" + cell + "**";
        out += "| " + pair + " | " + row->cell.strategy + " | " + row->cell.model_id + " | " +
               cell + " | " + format3(row->mean_token_length) + " | " + format3(row->alignment) +
               " | " + format3(row->validity_fraction) + " |\n";
    }
    return out;
}

} // namespace aof::report
