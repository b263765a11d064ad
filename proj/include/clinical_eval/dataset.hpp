#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace clineval::dataset {

struct QAItem {
    std::string question_id;
    std::string question;
    std::string gold_answer;
    std::optional<std::string> focus_area;
    std::optional<std::string> source;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DuplicateIdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadResult {
    std::vector<QAItem> items;
    size_t skipped = 0;  // rows rejected for empty question/answer
};

struct IngestResult {
    std::vector<QAItem> items;
    size_t skipped_pairs = 0;  // pairs with empty answer
    size_t skipped_files = 0;  // malformed XML documents
};

// Reads the flat JSONL corpus. ParseError names the offending line;
// DuplicateIdError names the repeated id.
LoadResult load_flat(const std::filesystem::path& path);

// Writes items back out in the flat JSONL schema.
void write_flat(const std::filesystem::path& path, const std::vector<QAItem>& items);

// Walks a MedQuAD-style XML directory; one QAItem per QAPair with a
// non-empty answer, id = "<document-id>#<pair-index>". Malformed files
// are skipped and tallied.
IngestResult ingest_medquad_xml(const std::filesystem::path& directory);

// FNV-1a 64 over "<seed>\x1f<question_id>" UTF-8 bytes.
uint64_t sample_hash(int64_t seed, const std::string& question_id);

// Deterministic seeded subset: sort by (sample_hash, question_id)
// ascending, take the first min(n, |items|). Pure in the item multiset.
std::vector<QAItem> sample(std::vector<QAItem> items, size_t n, int64_t seed);

}  // namespace clineval::dataset
