#include <doctest.h>

#include <cmath>
#include <set>

#include "aof/corpus.hpp"
#include "aof/error.hpp"
#include "aof/filter.hpp"
#include "aof/rng.hpp"

using namespace aof;
using embed::EmbeddingVector;
using filter::FilterConfig;
using filter::FilterDecision;
using filter::ReferenceEmbedding;
using genclient::BilingualRiddle;

namespace {

const std::filesystem::path kFixtures = AOF_FIXTURE_DIR;
const LanguagePair kEnZh{Language::en, Language::zh};

embed::Embedder& shared_embedder() {
    static embed::Embedder embedder([] {
        embed::EmbeddingProviderConfig config;
        config.kind = embed::ProviderKind::deterministic;
        config.model_id = "det-64";
        config.dimension = 64;
        return config;
    }());
    return embedder;
}

corpus::ReferenceCorpus small_corpus() {
    return corpus::load_corpus(kFixtures / "corpus_small.jsonl", corpus::CorpusFormat::jsonl)
        .corpus;
}

EmbeddingVector vec(std::vector<double> values) { return {std::move(values), "unit"}; }

BilingualRiddle riddle(const char* src, const char* tgt, const char* ans_src,
                       const char* ans_tgt) {
    BilingualRiddle r;
    r.text_source = src;
    r.text_target = tgt;
    r.answer_source = ans_src;
    r.answer_target = ans_tgt;
    return r;
}

struct ScriptedGenerator final : genclient::Generator {
    std::vector<std::string> responses;
    size_t cursor = 0;
    int calls = 0;

    explicit ScriptedGenerator(std::vector<std::string> r) : responses(std::move(r)) {}
    std::string generate(const std::string&) override {
        calls++;
        if (cursor >= responses.size()) return responses.back(); // repeat the last one
        return responses[cursor++];
    }
    std::string model_id() const override { return "scripted"; }
};

const char* kDuplicateBatch =
    "1. EN: I have keys but open no locks. What am I?\n"
    "   ZH: 我有很多钥匙却打不开任何锁。我是什么？\n"
    "   Answer: piano / 钢琴\n"
    "2. EN: Softly I fall from gray skies, erasing footprints as I lie.\n"
    "   ZH: 我从灰色的天空轻轻落下，抹去所有足迹。\n"
    "   Answer: snow / 雪\n";

const char* kNovelBatch =
    "1. EN: A silver thread sewn through midnight hills, humming when the cold arrives.\n"
    "   ZH: 一根银线缝过午夜的山丘，寒冷来临时低声吟唱。\n"
    "   Answer: river / 河流\n"
    "2. EN: Crowned without a kingdom, it bows only to the rain.\n"
    "   ZH: 没有王国的王冠，只向雨水低头。\n"
    "   Answer: sunflower / 向日葵\n";

} // namespace

TEST_SUITE("filter") {

TEST_CASE("novelty score: identical reference wins with score 1") {
    EmbeddingVector candidate = shared_embedder().embed("the same riddle text.");
    std::vector<ReferenceEmbedding> refs = {
        {"other", shared_embedder().embed("something unrelated entirely.")},
        {"same", shared_embedder().embed("the same riddle text.")},
    };
    auto result = filter::novelty_score(candidate, refs);
    CHECK(result.score == 1.0);
    CHECK(result.nearest_id == "same");
}

TEST_CASE("novelty score: empty reference list scores 0 with no id") {
    auto result = filter::novelty_score(vec({1.0, 0.0}), {});
    CHECK(result.score == 0.0);
    CHECK(!result.nearest_id.has_value());
}

TEST_CASE("novelty score: analytic 2-D angles pick the argmax") {
    EmbeddingVector candidate = vec({1.0, 0.0});
    auto at_cos = [](double c) { return vec({c, std::sqrt(1.0 - c * c)}); };
    std::vector<ReferenceEmbedding> refs = {
        {"r1", at_cos(0.2)}, {"r2", at_cos(0.9)}, {"r3", at_cos(0.4)}};
    auto result = filter::novelty_score(candidate, refs);
    CHECK(result.score == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(result.nearest_id == "r2");
}

TEST_CASE("novelty score: argmax ties break to the first occurrence") {
    EmbeddingVector candidate = vec({1.0, 0.0});
    std::vector<ReferenceEmbedding> refs = {{"first", vec({1.0, 0.0})},
                                            {"second", vec({1.0, 0.0})}};
    CHECK(filter::novelty_score(candidate, refs).nearest_id == "first");
}

TEST_CASE("novelty score: mismatch errors") {
    std::vector<ReferenceEmbedding> refs = {{"r", {{1.0, 0.0, 0.0}, "unit"}}};
    CHECK_THROWS_AS((void)filter::novelty_score(vec({1.0, 0.0}), refs), Error);
}

TEST_CASE("a score of exactly 0.75 is rejected at theta = 0.75") {
    // (3,2,1,1,1) has norm exactly 4, so the cosine against a unit axis is
    // exactly 3/4; no rounding is involved.
    EmbeddingVector candidate = vec({3.0, 2.0, 1.0, 1.0, 1.0});
    std::vector<ReferenceEmbedding> refs = {{"axis", vec({1.0, 0.0, 0.0, 0.0, 0.0})}};
    auto result = filter::novelty_score(candidate, refs);
    CHECK(result.score == 0.75);
    FilterConfig config = FilterConfig::defaults();
    CHECK(config.theta == 0.75);
    CHECK_FALSE(result.score < config.theta); // strict inequality: rejected
}

TEST_CASE("membership rejection: verbatim corpus texts score 1 for every theta <= 1") {
    corpus::ReferenceCorpus corpus = small_corpus();
    filter::ReferenceIndex index = filter::ReferenceIndex::build(corpus, shared_embedder());
    for (const auto& record : corpus.records) {
        EmbeddingVector candidate = shared_embedder().embed(record.text);
        auto result = filter::novelty_score(candidate, index.references(record.language));
        CHECK(result.score == 1.0);
        for (double theta : {0.25, 0.5, 0.75, 1.0}) CHECK_FALSE(result.score < theta);
    }
}

TEST_CASE("threshold monotonicity over random candidates") {
    corpus::ReferenceCorpus corpus = small_corpus();
    filter::ReferenceIndex index = filter::ReferenceIndex::build(corpus, shared_embedder());
    const double thetas[] = {0.65, 0.70, 0.75, 0.80};

    static const char* kWords[] = {"keys", "locks", "wind", "legs", "shadow", "paper",
                                   "river", "clock", "moon", "salt",  "door",  "ash"};
    uint64_t state = rng::derive_seed(11, "monotone");
    for (int round = 0; round < 100; ++round) {
        std::string text;
        size_t len = 2 + rng::bounded(state, 7);
        for (size_t i = 0; i < len; ++i) {
            if (i) text += ' ';
            text += kWords[rng::bounded(state, 12)];
        }
        double score =
            filter::novelty_score(shared_embedder().embed(text), index.references(Language::en))
                .score;
        for (size_t a = 0; a + 1 < 4; ++a) {
            bool accepted_low = score < thetas[a];
            bool accepted_high = score < thetas[a + 1];
            if (accepted_low) CHECK(accepted_high); // subset property
        }
    }
}

TEST_CASE("riddle constraints: banned answers match case-insensitively on either side") {
    FilterConfig config = FilterConfig::defaults();
    auto v1 = filter::check_riddle_constraints(
        riddle("Dark twin at my feet all day.", "白日里脚边的黑影。", "Shadow", "影子"), kEnZh,
        config);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0] == filter::kBannedAnswer);

    config.banned_answers[Language::zh] = {"影子"};
    auto v2 = filter::check_riddle_constraints(
        riddle("Dark twin at my feet all day.", "白日里脚边的黑影。", "companion", "影子"),
        kEnZh, config);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0] == filter::kBannedAnswer);
}

TEST_CASE("riddle constraints: banned openers strip leading quotes and ignore case") {
    FilterConfig config = FilterConfig::defaults();
    auto v = filter::check_riddle_constraints(
        riddle("I have keys but open no locks.", "钥匙很多却打不开锁。", "piano", "钢琴"),
        kEnZh, config);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == filter::kBannedOpener);

    auto quoted = filter::check_riddle_constraints(
        riddle("\"i AM the pause between heartbeats.\"", "心跳之间的停顿。", "rest", "休止"),
        kEnZh, config);
    REQUIRE(quoted.size() == 1);
    CHECK(quoted[0] == filter::kBannedOpener);

    auto clean = filter::check_riddle_constraints(
        riddle("Softly spoken yet never heard.", "轻声说出却从未被听见。", "word", "字"),
        kEnZh, config);
    CHECK(clean.empty());
}

TEST_CASE("batch constraints: closure quota") {
    FilterConfig config = FilterConfig::defaults();
    auto closure = [&](int i) {
        return riddle(("Riddle " + std::to_string(i) + ". What am I?").c_str(), "谜语。", "x",
                      "谜");
    };
    auto open_ended = [&](int i) {
        return riddle(("Riddle " + std::to_string(i) + " lingers in the air.").c_str(), "谜语。",
                      "x", "谜");
    };

    std::vector<BilingualRiddle> two_closures;
    for (int i = 0; i < 10; ++i) two_closures.push_back(i < 2 ? closure(i) : open_ended(i));
    CHECK(filter::check_batch_constraints(two_closures, config).empty());

    std::vector<BilingualRiddle> four_closures;
    for (int i = 0; i < 10; ++i) four_closures.push_back(i < 4 ? closure(i) : open_ended(i));
    auto v = filter::check_batch_constraints(four_closures, config);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == filter::kClosureQuotaExceeded);

    std::vector<BilingualRiddle> single = {closure(0)};
    CHECK(filter::check_batch_constraints(single, config).empty());
}

TEST_CASE("aof_generate: constant duplicates exhaust the retry cap") {
    corpus::ReferenceCorpus corpus = small_corpus();
    filter::ReferenceIndex index = filter::ReferenceIndex::build(corpus, shared_embedder());
    ScriptedGenerator generator({kDuplicateBatch});
    FilterConfig config = FilterConfig::defaults();
    config.max_attempts = 3;

    auto outcome = filter::aof_generate("prompt", generator, kEnZh, 2, index, shared_embedder(),
                                        config);
    CHECK(!outcome.batch.has_value());
    CHECK(outcome.attempts_used == 3);
    CHECK(generator.calls == 3); // exactly max_attempts generator calls
    REQUIRE(outcome.trace.size() == 6); // 2 riddles scored per attempt
    for (const auto& d : outcome.trace)
        if (d.riddle_index == 0) {
            CHECK(d.score == 1.0);
            CHECK_FALSE(d.accepted);
            CHECK(d.nearest_reference_id.has_value());
        }
}

TEST_CASE("aof_generate: duplicate then novel accepts on attempt 2") {
    corpus::ReferenceCorpus corpus = small_corpus();
    filter::ReferenceIndex index = filter::ReferenceIndex::build(corpus, shared_embedder());
    const size_t base_refs = index.total();
    ScriptedGenerator generator({kDuplicateBatch, kNovelBatch});
    FilterConfig config = FilterConfig::defaults();

    auto outcome = filter::aof_generate("prompt", generator, kEnZh, 2, index, shared_embedder(),
                                        config);
    REQUIRE(outcome.batch.has_value());
    CHECK(outcome.attempts_used == 2);
    CHECK(outcome.batch->size() == 2);

    // acceptance soundness, re-checkable from the trace
    for (const auto& d : outcome.trace) {
        if (d.attempt == 2) {
            CHECK(d.accepted);
            CHECK(d.score < config.theta);
            CHECK(d.violations.empty());
        }
    }
    // accepted riddles joined the live reference set (both sides)
    CHECK(index.total() == base_refs + 4);

    // and a verbatim replay of an accepted riddle is now rejected
    EmbeddingVector again = shared_embedder().embed((*outcome.batch)[0].text_target);
    CHECK(filter::novelty_score(again, index.references(Language::zh)).score == 1.0);
}

TEST_CASE("aof_generate: theta = 1.0 accepts any novel batch on attempt 1") {
    corpus::ReferenceCorpus corpus = small_corpus();
    filter::ReferenceIndex index = filter::ReferenceIndex::build(corpus, shared_embedder());
    ScriptedGenerator generator({kNovelBatch});
    FilterConfig config = FilterConfig::defaults();
    config.theta = 1.0;

    auto outcome = filter::aof_generate("prompt", generator, kEnZh, 2, index, shared_embedder(),
                                        config);
    REQUIRE(outcome.batch.has_value());
    CHECK(outcome.attempts_used == 1);
    for (const auto& d : outcome.trace) CHECK(d.score < 1.0);
}

TEST_CASE("aof_generate: parse failures consume an attempt and leave a trace entry") {
    corpus::ReferenceCorpus corpus = small_corpus();
    filter::ReferenceIndex index = filter::ReferenceIndex::build(corpus, shared_embedder());
    ScriptedGenerator generator({"no items here at all", kNovelBatch});
    FilterConfig config = FilterConfig::defaults();

    auto outcome = filter::aof_generate("prompt", generator, kEnZh, 2, index, shared_embedder(),
                                        config);
    REQUIRE(outcome.batch.has_value());
    CHECK(outcome.attempts_used == 2);
    REQUIRE(outcome.trace.size() >= 3);
    CHECK(outcome.trace[0].riddle_index == -1);
    REQUIRE(outcome.trace[0].violations.size() == 1);
    CHECK(outcome.trace[0].violations[0] == filter::kParseFailureLabel);
    CHECK_FALSE(outcome.trace[0].accepted);
}

TEST_CASE("aof_generate: batch constraint marks contributors and fails the attempt") {
    corpus::ReferenceCorpus corpus = small_corpus();
    filter::ReferenceIndex index = filter::ReferenceIndex::build(corpus, shared_embedder());
    // batch of two, quota 1: both riddles end with the closure formula
    std::string closure_batch =
        "1. EN: A stranger in every mirror. What am I?\n"
        "   ZH: 镜中的陌生人。\n"
        "   Answer: reflection / 倒影\n"
        "2. EN: The debt the morning owes the night. What am I?\n"
        "   ZH: 清晨欠黑夜的债。\n"
        "   Answer: dew / 露珠\n";
    ScriptedGenerator generator({closure_batch});
    FilterConfig config = FilterConfig::defaults();
    config.closure_quota = 1;
    config.max_attempts = 1;

    auto outcome = filter::aof_generate("prompt", generator, kEnZh, 2, index, shared_embedder(),
                                        config);
    CHECK(!outcome.batch.has_value());
    size_t flagged = 0;
    for (const auto& d : outcome.trace)
        for (const auto& v : d.violations)
            if (v == filter::kClosureQuotaExceeded) flagged++;
    CHECK(flagged == 2);
}

TEST_CASE("trace serialization round trip") {
    FilterDecision d1;
    d1.attempt = 1;
    d1.riddle_index = 0;
    d1.score = 0.875;
    d1.nearest_reference_id = "en-001";
    d1.accepted = false;
    d1.violations = {filter::kBannedOpener};
    FilterDecision d2;
    d2.attempt = 2;
    d2.riddle_index = -1;
    d2.violations = {filter::kParseFailureLabel};

    std::string jsonl = filter::trace_to_jsonl(std::vector<FilterDecision>{d1, d2});
    auto back = filter::trace_from_jsonl(jsonl);
    REQUIRE(back.size() == 2);
    CHECK(back[0].score == 0.875);
    CHECK(back[0].nearest_reference_id == "en-001");
    CHECK(back[0].violations == std::vector<std::string>{filter::kBannedOpener});
    CHECK(!back[1].nearest_reference_id.has_value());
    CHECK(back[1].riddle_index == -1);
}

} // TEST_SUITE
