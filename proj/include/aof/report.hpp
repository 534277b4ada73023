#pragma once

#include <span>
#include <string>

#include "aof/metrics.hpp"

namespace aof::report {

// All numbers are rendered with the same 3-decimal formatter in both
// formats, so CSV and Markdown always agree.
std::string format3(double value);

// Columns: language_pair,strategy,model,self_bleu,distinct_2,
//          mean_token_length,alignment_proxy,validity_fraction
std::string to_csv(std::span<const metrics::MetricReport> rows);

// One table row per cell, grouped by language pair. The best cell of each
// pair (lowest Self-BLEU, ties broken by highest Distinct-2) has its
// "Self-BLEU / Distinct-2" entry bolded.
std::string to_markdown(std::span<const metrics::MetricReport> rows);

} // namespace aof::report
