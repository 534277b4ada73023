#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aof/embed.hpp"
#include "aof/genclient.hpp"
#include "aof/language.hpp"

namespace aof::metrics {

enum class TokenizerMode { automatic, whitespace, character };

struct MetricConfig {
    int ngram_order = 2;
    double smoothing_epsilon = 1e-9;
    TokenizerMode tokenization = TokenizerMode::automatic;

    void validate() const;
};

struct CellKey {
    std::string strategy;
    LanguagePair pair;
    std::string model_id;
};

struct MetricReport {
    double self_bleu = 0.0;
    double distinct_2 = 0.0;
    double mean_token_length = 0.0;
    double alignment = 0.0;         // sentence-embedding proxy, reported as "alignment (proxy)"
    double validity_fraction = 0.0;
    CellKey cell;
};

// Tokenization policy:
//   automatic  — en/fr/ar: split on whitespace, then split punctuation and
//                symbols off as single-character tokens ("a b, c" ->
//                [a, b, ",", c]); zh/ja: one token per non-whitespace
//                codepoint.
//   whitespace — plain whitespace splitting for any language.
//   character  — per-codepoint tokens for any language.
std::vector<std::string> tokenize(std::string_view text, Language lang,
                                  TokenizerMode mode = TokenizerMode::automatic);

// Mean over the batch of sentence BLEU of each text against all others as
// references: geometric mean of modified n-gram precisions for n = 1..order
// (each floored at smoothing_epsilon; orders with no n-grams are skipped so
// short identical texts still score 1), times a brevity penalty against the
// closest reference length. Throws when the batch has fewer than two texts.
double self_bleu(std::span<const std::string> batch, Language lang, const MetricConfig& config);

// Pooled corpus-level ratio: unique n-grams across all texts over total
// n-gram occurrences; n-grams never span text boundaries. Throws when no
// text yields an n-gram.
double distinct_n(std::span<const std::string> batch, Language lang, int n,
                  TokenizerMode mode = TokenizerMode::automatic);

// Arithmetic mean of per-text token counts. Throws on an empty batch.
double mean_token_length(std::span<const std::string> batch, Language lang,
                         TokenizerMode mode = TokenizerMode::automatic);

// Mean cosine between the two language sides' sentence embeddings.
double alignment_score(std::span<const genclient::BilingualRiddle> batch,
                       embed::Embedder& embedder);

// Pluggable structural validity contract. A full dependency-parse validator
// can be slotted in from outside; the built-in one is heuristic.
class StructuralValidator {
public:
    virtual ~StructuralValidator() = default;
    virtual bool valid(const genclient::BilingualRiddle& riddle, LanguagePair pair) const = 0;
};

// Built-in heuristic: both sides non-empty, paired punctuation balanced,
// terminal punctuation present, and each side's dominant script matches its
// language.
class HeuristicValidator final : public StructuralValidator {
public:
    bool valid(const genclient::BilingualRiddle& riddle, LanguagePair pair) const override;
};

// Fraction of riddles the validator accepts; validator exceptions count the
// riddle invalid. Throws on an empty batch.
double structural_validity(std::span<const genclient::BilingualRiddle> batch, LanguagePair pair,
                           const StructuralValidator& validator);

} // namespace aof::metrics
