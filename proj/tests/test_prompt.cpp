#include <doctest.h>

#include <fstream>

#include "aof/error.hpp"
#include "aof/prompt.hpp"

using namespace aof;
using prompt::PromptSpec;
using prompt::Strategy;

namespace {

const std::filesystem::path kPromptDir = AOF_PROMPT_DIR;
const std::filesystem::path kFixtures = AOF_FIXTURE_DIR;

PromptSpec aof_spec(Language target) {
    PromptSpec spec;
    spec.strategy = Strategy::aof;
    spec.pair = {Language::en, target};
    spec.batch_size = 10;
    return spec;
}

} // namespace

TEST_SUITE("prompt") {

TEST_CASE("strategy list: five, fixed order, labels match the fixture") {
    const auto& strategies = prompt::list_strategies();
    REQUIRE(strategies.size() == 5);
    CHECK(strategies[0].strategy == Strategy::zero_shot);
    CHECK(strategies[1].strategy == Strategy::few_shot);
    CHECK(strategies[2].strategy == Strategy::chain_of_thought);
    CHECK(strategies[3].strategy == Strategy::adversarial);
    CHECK(strategies[4].strategy == Strategy::aof);

    std::ifstream labels(kFixtures / "strategy_labels.txt");
    REQUIRE(labels.good());
    std::string line;
    size_t i = 0;
    while (std::getline(labels, line)) {
        REQUIRE(i < strategies.size());
        CHECK(strategies[i].label == line);
        i++;
    }
    CHECK(i == 5);
}

TEST_CASE("aof prompt names every configured banned answer") {
    prompt::TemplateStore store(kPromptDir);
    std::string text = store.render(aof_spec(Language::zh));
    for (const char* word : {"shadow", "time", "echo", "fire", "breath", "wind", "silence"})
        CHECK(text.find(std::string("\"") + word + "\"") != std::string::npos);
    CHECK(text.find("Avoid common answers such as {") != std::string::npos);
}

TEST_CASE("every aof prompt carries the three constraint clauses") {
    prompt::TemplateStore store(kPromptDir);
    for (Language target : {Language::zh, Language::ja, Language::ar, Language::fr}) {
        PromptSpec spec = aof_spec(target);
        std::string text = store.render(spec);
        // opener clause, from config
        CHECK(text.find("Avoid repeating openers like") != std::string::npos);
        for (const auto& opener : spec.constraints.banned_openers)
            CHECK(text.find("\"" + opener + "\"") != std::string::npos);
        // closure quota clause, from config
        CHECK(text.find("riddles may end with") != std::string::npos);
        CHECK(text.find("\"What am I?\"") != std::string::npos);
        CHECK(text.find("2-3") != std::string::npos); // quota 3 verbalized as a 2-3 range
        // banned answers clause, from config
        CHECK(text.find("Avoid common answers such as") != std::string::npos);
        // nothing unexpanded
        CHECK(text.find("{{") == std::string::npos);
    }
}

TEST_CASE("constraint clauses follow the configuration") {
    prompt::TemplateStore store(kPromptDir);
    PromptSpec spec = aof_spec(Language::fr);
    spec.constraints.banned_answers[Language::en] = {"mirror"};
    spec.constraints.banned_openers = {"You see"};
    spec.constraints.closure_quota = 2;
    std::string text = store.render(spec);
    CHECK(text.find("\"mirror\"") != std::string::npos);
    CHECK(text.find("shadow") == std::string::npos);
    CHECK(text.find("\"You see\"") != std::string::npos);
    CHECK(text.find("1-2 riddles may end with") != std::string::npos);
}

TEST_CASE("few_shot inlines exemplars verbatim and validates the count") {
    prompt::TemplateStore store(kPromptDir);
    PromptSpec spec;
    spec.strategy = Strategy::few_shot;
    spec.pair = {Language::en, Language::ja};
    spec.batch_size = 10;
    spec.exemplars = {{"What has keys but can't open locks?", "A piano"},
                      {"What has hands but can't clap?", "A clock"},
                      {"What runs but never walks?", "Water"}};
    std::string text = store.render(spec);
    for (const auto& e : spec.exemplars) {
        CHECK(text.find("Riddle: " + e.riddle) != std::string::npos);
        CHECK(text.find("Answer: " + e.answer) != std::string::npos);
    }
    CHECK(text.find("English and Japanese") != std::string::npos);

    spec.exemplars.resize(2);
    CHECK_THROWS_AS((void)store.render(spec), ConfigError);
    spec.exemplars.assign(6, {"r", "a"});
    CHECK_THROWS_AS((void)store.render(spec), ConfigError);
}

TEST_CASE("zero_shot substitutes the batch size and has no exemplars") {
    prompt::TemplateStore store(kPromptDir);
    PromptSpec spec;
    spec.strategy = Strategy::zero_shot;
    spec.pair = {Language::en, Language::fr};
    spec.batch_size = 7;
    std::string text = store.render(spec);
    CHECK(text.find('7') != std::string::npos);
    CHECK(text.find("Riddle:") == std::string::npos);
    CHECK(text.find("{{") == std::string::npos);
}

TEST_CASE("render is deterministic and batch size only changes numerals") {
    prompt::TemplateStore store(kPromptDir);
    PromptSpec spec = aof_spec(Language::zh);
    std::string a = store.render(spec);
    std::string b = store.render(spec);
    CHECK(a == b);

    spec.batch_size = 12;
    std::string c = store.render(spec);
    CHECK(c != a);
    // skeleton identical once numerals are blanked
    auto blank_digits = [](std::string s) {
        for (char& ch : s)
            if (ch >= '0' && ch <= '9') ch = '#';
        return s;
    };
    // quota range also contains digits, so compare with all digits blanked
    CHECK(blank_digits(a) == blank_digits(c));
}

TEST_CASE("missing template names the pair") {
    prompt::TemplateStore store(kPromptDir);
    PromptSpec spec;
    spec.strategy = Strategy::zero_shot;
    spec.pair = {Language::en, Language::en}; // no such asset
    try {
        (void)store.render(spec);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("en-en") != std::string::npos);
    }
}

TEST_CASE("the ja variant keeps its no-translation rule") {
    prompt::TemplateStore store(kPromptDir);
    std::string ja = store.render(aof_spec(Language::ja));
    CHECK(ja.find("should not** be translated into Japanese") != std::string::npos);
    std::string zh = store.render(aof_spec(Language::zh));
    CHECK(zh.find("translated") == std::string::npos);
    CHECK(zh.find("diverse grammar") != std::string::npos);
}

} // TEST_SUITE
