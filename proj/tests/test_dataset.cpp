#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "clinical_eval/dataset.hpp"
#include "oracles.hpp"

using namespace clineval::dataset;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("clineval_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

const char* kValidDoc = R"(<?xml version="1.0" encoding="UTF-8"?>
<Document id="0000001" source="GARD" url="https://example.test/1">
  <Focus>Keratoderma</Focus>
  <QAPairs>
    <QAPair pid="1">
      <Question qid="0000001-1">What is keratoderma?</Question>
      <Answer>A skin condition with thickening of the palms and soles.</Answer>
    </QAPair>
    <QAPair pid="2">
      <Question qid="0000001-2">Is it inherited?</Question>
      <Answer></Answer>
    </QAPair>
  </QAPairs>
</Document>
)";

}  // namespace

TEST_CASE("load_flat parses valid rows") {
    TempDir dir;
    const auto file = dir.path / "corpus.jsonl";
    write_file(file,
               R"({"question_id":"a","question":"Q1?","gold_answer":"A1.","focus_area":"x","source":"s"})"
               "\n"
               R"({"question_id":"b","question":"Q2?","gold_answer":"A2.","focus_area":null,"source":null})"
               "\n"
               R"({"question_id":"c","question":"Q3?","gold_answer":"A3."})"
               "\n");
    const auto result = load_flat(file);
    CHECK(result.items.size() == 3);
    CHECK(result.skipped == 0);
    CHECK(result.items[0].focus_area == "x");
    CHECK_FALSE(result.items[1].focus_area.has_value());
}

TEST_CASE("load_flat rejects duplicate ids by name") {
    TempDir dir;
    const auto file = dir.path / "corpus.jsonl";
    write_file(file,
               R"({"question_id":"dup","question":"Q?","gold_answer":"A."})"
               "\n"
               R"({"question_id":"dup","question":"Q?","gold_answer":"B."})"
               "\n");
    CHECK_THROWS_WITH_AS(load_flat(file), doctest::Contains("dup"), DuplicateIdError);
}

TEST_CASE("load_flat skips empty-answer rows with a count") {
    TempDir dir;
    const auto file = dir.path / "corpus.jsonl";
    write_file(file,
               R"({"question_id":"a","question":"Q?","gold_answer":"A."})"
               "\n"
               R"({"question_id":"b","question":"Q?","gold_answer":"  !! "})"
               "\n"
               R"({"question_id":"c","question":"","gold_answer":"A."})"
               "\n");
    const auto result = load_flat(file);
    CHECK(result.items.size() == 1);
    CHECK(result.skipped == 2);
}

TEST_CASE("load_flat reports the line of malformed JSON") {
    TempDir dir;
    const auto file = dir.path / "corpus.jsonl";
    write_file(file,
               R"({"question_id":"a","question":"Q?","gold_answer":"A."})"
               "\nnot json\n");
    CHECK_THROWS_WITH_AS(load_flat(file), doctest::Contains(":2"), ParseError);
}

TEST_CASE("medquad xml ingestion") {
    TempDir dir;
    write_file(dir.path / "doc1.xml", kValidDoc);

    SUBCASE("one item per pair with a non-empty answer") {
        const auto result = ingest_medquad_xml(dir.path);
        REQUIRE(result.items.size() == 1);
        CHECK(result.skipped_pairs == 1);
        CHECK(result.items[0].question_id == "0000001#1");
        CHECK(result.items[0].question == "What is keratoderma?");
        CHECK(result.items[0].focus_area == "Keratoderma");
        CHECK(result.items[0].source == "GARD");
    }

    SUBCASE("malformed files are skipped, valid ones kept") {
        write_file(dir.path / "doc0_broken.xml", "<Document><unclosed>");
        const auto result = ingest_medquad_xml(dir.path);
        CHECK(result.items.size() == 1);
        CHECK(result.skipped_files == 1);
    }
}

TEST_CASE("ingesting an empty directory yields nothing") {
    TempDir dir;
    const auto result = ingest_medquad_xml(dir.path / "nowhere");
    CHECK(result.items.empty());
    CHECK(ingest_medquad_xml(dir.path).items.empty());
}

TEST_CASE("xml ingest round-trips through the flat format") {
    TempDir dir;
    write_file(dir.path / "doc1.xml", kValidDoc);
    const auto ingested = ingest_medquad_xml(dir.path);
    const auto flat = dir.path / "flat.jsonl";
    write_flat(flat, ingested.items);
    const auto loaded = load_flat(flat);
    REQUIRE(loaded.items.size() == ingested.items.size());
    for (size_t i = 0; i < loaded.items.size(); ++i) {
        CHECK(loaded.items[i].question_id == ingested.items[i].question_id);
        CHECK(loaded.items[i].question == ingested.items[i].question);
        CHECK(loaded.items[i].gold_answer == ingested.items[i].gold_answer);
        CHECK(loaded.items[i].focus_area == ingested.items[i].focus_area);
        CHECK(loaded.items[i].source == ingested.items[i].source);
    }
}

namespace {

std::vector<QAItem> make_items(int n) {
    std::vector<QAItem> items;
    for (int i = 0; i < n; ++i) {
        items.push_back({"q" + std::to_string(i), "question", "answer", std::nullopt, std::nullopt});
    }
    return items;
}

std::vector<std::string> ids(const std::vector<QAItem>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) out.push_back(item.question_id);
    return out;
}

}  // namespace

TEST_CASE("sample hash matches an independent FNV-1a oracle") {
    for (const auto& [seed, qid] : std::vector<std::pair<int64_t, std::string>>{
             {42, "q1"}, {0, ""}, {-7, "0000123#4"}}) {
        const std::string keyed = std::to_string(seed) + "\x1f" + qid;
        CHECK(sample_hash(seed, qid) == oracles::fnv1a(keyed));
    }
}

TEST_CASE("sample basics") {
    CHECK(sample(make_items(5), 0, 42).empty());
    CHECK(sample(make_items(5), 99, 42).size() == 5);
    CHECK(sample({}, 3, 42).empty());
}

TEST_CASE("sample is deterministic and permutation invariant") {
    auto items = make_items(200);
    const auto first = ids(sample(items, 50, 42));
    CHECK(first == ids(sample(items, 50, 42)));

    std::mt19937 rng(5);
    std::shuffle(items.begin(), items.end(), rng);
    CHECK(first == ids(sample(items, 50, 42)));

    // prefix property: a larger sample extends the smaller one
    const auto larger = ids(sample(items, 60, 42));
    CHECK(std::equal(first.begin(), first.end(), larger.begin()));
}

TEST_CASE("different seeds select different subsets (statistical)") {
    const auto items = make_items(200);
    const auto a = ids(sample(items, 50, 42));
    const auto b = ids(sample(items, 50, 43));
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::vector<std::string> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::back_inserter(common));
    CHECK(common.size() < 40);  // overlap of two random 25% draws is ~12.5
}
