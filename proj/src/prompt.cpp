#include "aof/prompt.hpp"

#include <fstream>
#include <sstream>

#include "aof/error.hpp"

namespace aof::prompt {
namespace {

const std::array<StrategyInfo, 5> kStrategies = {{
    {Strategy::zero_shot, "zero_shot", "Zero-Shot"},
    {Strategy::few_shot, "few_shot", "Few-Shot"},
    {Strategy::chain_of_thought, "chain_of_thought", "Chain-of-Thought"},
    {Strategy::adversarial, "adversarial", "Adversarial"},
    {Strategy::aof, "aof", "Adaptive Originality Filtering (AOF)"},
}};

void replace_all(std::string& text, std::string_view placeholder, std::string_view value) {
    size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
}

std::string quoted_list(const std::vector<std::string>& items, std::string_view joiner) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += joiner;
        out += "\"" + items[i] + "\"";
    }
    return out;
}

std::string render_banned_answers(const filter::FilterConfig& config, LanguagePair pair) {
    std::vector<std::string> words;
    auto add = [&](Language lang) {
        auto it = config.banned_answers.find(lang);
        if (it == config.banned_answers.end()) return;
        for (const std::string& w : it->second) words.push_back(w);
    };
    add(pair.source);
    if (pair.target != pair.source) add(pair.target);
    std::string out = "{";
    for (size_t i = 0; i < words.size(); ++i) {
        if (i > 0) out += ", ";
        out += "\"" + words[i] + "\"";
    }
    out += "}";
    return out;
}

std::string render_closure_patterns(const filter::FilterConfig& config) {
    auto it = config.closure_patterns.find(Language::en);
    if (it == config.closure_patterns.end() || it->second.empty()) return "\"What am I?\"";
    return quoted_list(it->second, " or ");
}

std::string render_exemplars(const std::vector<Exemplar>& exemplars) {
    std::string out;
    for (const Exemplar& e : exemplars) {
        out += "Riddle: " + e.riddle + "\n";
        out += "Answer: " + e.answer + "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

} // namespace

const std::array<StrategyInfo, 5>& list_strategies() { return kStrategies; }

std::optional<Strategy> parse_strategy(std::string_view code) {
    for (const StrategyInfo& info : kStrategies)
        if (info.code == code) return info.strategy;
    return std::nullopt;
}

std::string_view strategy_code(Strategy strategy) {
    for (const StrategyInfo& info : kStrategies)
        if (info.strategy == strategy) return info.code;
    return "?";
}

std::string_view strategy_label(Strategy strategy) {
    for (const StrategyInfo& info : kStrategies)
        if (info.strategy == strategy) return info.label;
    return "?";
}

TemplateStore::TemplateStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_))
        throw ConfigError("prompt template directory not found: " + dir_.string());
}

std::string TemplateStore::load(Strategy strategy, LanguagePair pair) const {
    std::filesystem::path file =
        dir_ / (std::string(strategy_code(strategy)) + "_" + pair_code(pair) + ".txt");
    std::ifstream in(file);
    if (!in)
        throw ConfigError("no prompt template for (" + std::string(strategy_code(strategy)) +
                          ", " + pair_code(pair) + "): " + file.string());
    std::string text, line;
    while (std::getline(in, line)) {
        if (line.rfind("#:", 0) == 0) continue; // asset comment
        text += line;
        text += '\n';
    }
    while (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

std::string TemplateStore::render(const PromptSpec& spec) const {
    if (spec.batch_size < 1) throw ConfigError("prompt: batch_size must be >= 1");
    if (spec.strategy == Strategy::few_shot &&
        (spec.exemplars.size() < 3 || spec.exemplars.size() > 5))
        throw ConfigError("prompt: few_shot requires 3-5 exemplars, got " +
                          std::to_string(spec.exemplars.size()));

    std::string text = load(spec.strategy, spec.pair);

    replace_all(text, "{{batch_size}}", std::to_string(spec.batch_size));
    replace_all(text, "{{language_pair}}", pair_code(spec.pair));
    replace_all(text, "{{exemplars}}", render_exemplars(spec.exemplars));
    replace_all(text, "{{banned_answers}}", render_banned_answers(spec.constraints, spec.pair));
    replace_all(text, "{{banned_openers}}", quoted_list(spec.constraints.banned_openers, " or "));
    replace_all(text, "{{closure_patterns}}", render_closure_patterns(spec.constraints));
    const int quota = spec.constraints.closure_quota;
    std::string range = quota > 1 ? std::to_string(quota - 1) + "-" + std::to_string(quota)
                                  : std::to_string(quota);
    replace_all(text, "{{closure_range}}", range);

    if (text.find("{{") != std::string::npos)
        throw ConfigError("prompt template for (" + std::string(strategy_code(spec.strategy)) +
                          ", " + pair_code(spec.pair) + ") has an unknown placeholder near '" +
                          text.substr(text.find("{{"), 24) + "'");
    return text;
}

} // namespace aof::prompt
