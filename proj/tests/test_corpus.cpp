#include <doctest.h>

#include <fstream>
#include <set>

#include "aof/corpus.hpp"
#include "aof/error.hpp"

using namespace aof;
using corpus::CorpusFormat;

namespace {
const std::filesystem::path kFixtures = AOF_FIXTURE_DIR;
}

TEST_SUITE("corpus") {

TEST_CASE("identity load") {
    auto result = corpus::load_corpus(kFixtures / "corpus_small.jsonl", CorpusFormat::jsonl);
    CHECK(result.corpus.size() == 8);
    CHECK(result.duplicates_dropped == 0);
    auto counts = result.corpus.counts_by_language();
    CHECK(counts[Language::en] == 4);
    CHECK(counts[Language::zh] == 4);
}

TEST_CASE("dedup drops the second record") {
    auto result = corpus::load_corpus(kFixtures / "corpus_dup.jsonl", CorpusFormat::jsonl);
    CHECK(result.corpus.size() == 2);
    CHECK(result.duplicates_dropped == 1);
    CHECK(result.corpus.records[0].id == "r1"); // first occurrence kept
}

TEST_CASE("multiple-choice records resolve answers from the index") {
    auto result = corpus::load_corpus(kFixtures / "corpus_multichoice.jsonl", CorpusFormat::jsonl);
    REQUIRE(result.corpus.size() == 10);
    const auto& first = result.corpus.records[0];
    CHECK(first.id == "mc-001");
    CHECK(first.language == Language::en);
    CHECK(first.text == "What gets wetter the more it dries?");
    CHECK(first.answer == "a towel");
    REQUIRE(first.distractors.size() == 3);
    CHECK(first.distractors[0] == "a sponge");
    const auto& second = result.corpus.records[1];
    CHECK(second.answer == "a bottle");
}

TEST_CASE("malformed records name the line") {
    try {
        corpus::load_corpus(kFixtures / "corpus_bad.jsonl", CorpusFormat::jsonl);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("unsupported language names the record") {
    auto diag = corpus::scan_corpus(kFixtures / "corpus_bad.jsonl", CorpusFormat::jsonl);
    CHECK(diag.corpus.size() == 2);
    REQUIRE(diag.malformed.size() == 2);
    CHECK(diag.malformed[0].line == 2);
    bool names_record = false;
    for (const auto& m : diag.malformed)
        if (m.message.find("x-1") != std::string::npos &&
            m.message.find("xx") != std::string::npos)
            names_record = true;
    CHECK(names_record);
}

TEST_CASE("csv load with quoted fields and distractors") {
    auto result = corpus::load_corpus(kFixtures / "corpus_small.csv", CorpusFormat::csv);
    REQUIRE(result.corpus.size() == 3);
    CHECK(result.corpus.records[0].text == "What has keys, but opens no doors?");
    REQUIRE(result.corpus.records[0].distractors.size() == 2);
    CHECK(result.corpus.records[0].distractors[1] == "typewriter");
    CHECK(result.corpus.records[2].language == Language::fr);
}

TEST_CASE("csv column names are remappable") {
    auto dir = std::filesystem::temp_directory_path() / "aof_corpus_csv";
    std::filesystem::create_directories(dir);
    auto file = dir / "custom.csv";
    {
        std::ofstream out(file);
        out << "riddle_id,lang,riddle,solution\n";
        out << "k1,en,A blanket of white.,snow\n";
    }
    corpus::CsvColumnMap columns;
    columns.id = "riddle_id";
    columns.language = "lang";
    columns.text = "riddle";
    columns.answer = "solution";
    auto result = corpus::load_corpus(file, CorpusFormat::csv, columns);
    REQUIRE(result.corpus.size() == 1);
    CHECK(result.corpus.records[0].id == "k1");
    CHECK(result.corpus.records[0].answer == "snow");

    // default mapping fails against these headers, naming the missing columns
    CHECK_THROWS_AS((void)corpus::load_corpus(file, CorpusFormat::csv), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("records are normalized on load") {
    auto result = corpus::load_corpus(kFixtures / "corpus_dup.jsonl", CorpusFormat::jsonl);
    CHECK(result.corpus.records[0].text == "A cloud of chalk dust.");
}

TEST_CASE("dedup soundness: no two records share (language, text)") {
    for (const char* name : {"corpus_small.jsonl", "corpus_dup.jsonl", "corpus_multichoice.jsonl"}) {
        auto result = corpus::load_corpus(kFixtures / name, CorpusFormat::jsonl);
        std::set<std::pair<Language, std::string>> seen;
        for (const auto& rec : result.corpus.records)
            CHECK(seen.insert({rec.language, rec.text}).second);
    }
}

TEST_CASE("balanced sampling: exhaustive stratum returns everything") {
    auto loaded = corpus::load_corpus(kFixtures / "corpus_small.jsonl", CorpusFormat::jsonl);
    auto sampled = corpus::sample_balanced(loaded.corpus, 4, 123);
    CHECK(sampled.size() == 8);
    std::set<std::string> ids;
    for (const auto& rec : sampled.records) ids.insert(rec.id);
    CHECK(ids.size() == 8);
}

TEST_CASE("balanced sampling is deterministic and balanced") {
    auto loaded = corpus::load_corpus(kFixtures / "corpus_small.jsonl", CorpusFormat::jsonl);
    auto a = corpus::sample_balanced(loaded.corpus, 2, 7);
    auto b = corpus::sample_balanced(loaded.corpus, 2, 7);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a.records[i].id == b.records[i].id);
    auto counts = a.counts_by_language();
    CHECK(counts[Language::en] == 2);
    CHECK(counts[Language::zh] == 2);

    auto c = corpus::sample_balanced(loaded.corpus, 2, 8);
    bool differs = false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a.records[i].id != c.records[i].id) differs = true;
    CHECK(differs); // different seed, different draw (true for this fixture)
}

TEST_CASE("undersized stratum names the deficient language") {
    auto loaded = corpus::load_corpus(kFixtures / "corpus_small.csv", CorpusFormat::csv);
    // csv fixture: en:2, fr:1
    try {
        corpus::sample_balanced(loaded.corpus, 2, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("fr") != std::string::npos);
    }
}

} // TEST_SUITE
