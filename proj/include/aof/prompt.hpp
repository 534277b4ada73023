#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aof/filter.hpp"
#include "aof/language.hpp"

namespace aof::prompt {

enum class Strategy { zero_shot, few_shot, chain_of_thought, adversarial, aof };

struct StrategyInfo {
    Strategy strategy;
    std::string_view code;  // "zero_shot", ... (artifact directories, config keys)
    std::string_view label; // human-readable table heading
};

// The five strategies in comparison order.
const std::array<StrategyInfo, 5>& list_strategies();
std::optional<Strategy> parse_strategy(std::string_view code);
std::string_view strategy_code(Strategy strategy);
std::string_view strategy_label(Strategy strategy);

struct Exemplar {
    std::string riddle;
    std::string answer;
};

struct PromptSpec {
    Strategy strategy = Strategy::zero_shot;
    LanguagePair pair;
    size_t batch_size = 10;
    std::vector<Exemplar> exemplars;             // few_shot only, 3–5 required
    filter::FilterConfig constraints = filter::FilterConfig::defaults(); // verbalized for aof
};

// Template assets live one file per (strategy, language pair), named
// "<strategy>_<pair>.txt". Leading lines starting with "#:" are asset
// comments and are stripped. Placeholders:
//   {{batch_size}}        batch size numeral
//   {{exemplars}}         "Riddle: …\nAnswer: …" lines (few_shot)
//   {{banned_answers}}    the configured banned-answer set, brace-enclosed
//   {{banned_openers}}    the configured opener list, quoted, "or"-joined
//   {{closure_patterns}}  the configured closure endings, quoted
//   {{closure_range}}     the closure quota verbalized as "(q-1)–q"
//   {{language_pair}}     e.g. "en-zh"
class TemplateStore {
public:
    explicit TemplateStore(std::filesystem::path dir);

    // Deterministic render; throws on a missing template, on a few_shot spec
    // without 3–5 exemplars, and on leftover placeholders.
    std::string render(const PromptSpec& spec) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::string load(Strategy strategy, LanguagePair pair) const;
    std::filesystem::path dir_;
};

} // namespace aof::prompt
