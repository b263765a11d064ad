#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "clinical_eval/inference_client.hpp"
#include "clinical_eval/text_metrics.hpp"

namespace clineval::store {

struct StorageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DuplicateKeyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunKey {
    std::string model_id;
    std::string question_id;
    int run_index = 0;

    auto operator<=>(const RunKey&) const = default;
};

struct ScoredRecord {
    RunKey key;
    metrics::ScoreVector scores;
    std::string judge_parse_method = "unparsed";
    std::optional<std::string> semantic_error;  // set when the encoder failed
};

// Append-only durable JSON-lines file. A torn trailing line (missing
// newline or unparsable JSON) left by a crash is dropped on open by
// truncating back to the last intact record.
class JsonlFile {
public:
    JsonlFile() = default;
    explicit JsonlFile(const std::filesystem::path& path);
    ~JsonlFile();

    JsonlFile(const JsonlFile&) = delete;
    JsonlFile& operator=(const JsonlFile&) = delete;
    JsonlFile(JsonlFile&& other) noexcept;
    JsonlFile& operator=(JsonlFile&& other) noexcept;

    const std::vector<std::string>& lines() const { return lines_; }
    // Line is on disk (flushed + fsynced) before this returns.
    void append(const std::string& json_line);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    std::vector<std::string> lines_;
};

// Responses store: at most one ok record per RunKey; failed records may
// repeat (each retry attempt leaves its own audit line).
class ResponseStore {
public:
    explicit ResponseStore(const std::filesystem::path& path);

    void append(const infer::GenerationRecord& record);
    std::set<RunKey> completed_keys() const;
    size_t record_count() const { return records_.size(); }
    const std::vector<infer::GenerationRecord>& records() const { return records_; }
    // One record per key: the ok record when present, else the last
    // failed attempt.
    std::map<RunKey, infer::GenerationRecord> effective_records() const;

private:
    JsonlFile file_;
    std::vector<infer::GenerationRecord> records_;
    std::set<RunKey> ok_keys_;
};

// Scores store: exactly one record per RunKey.
class ScoreStore {
public:
    // truncate=true starts the store from scratch (re-score semantics).
    explicit ScoreStore(const std::filesystem::path& path, bool truncate = false);

    void append(const ScoredRecord& record);
    const std::vector<ScoredRecord>& records() const { return records_; }

private:
    JsonlFile file_;
    std::vector<ScoredRecord> records_;
    std::set<RunKey> keys_;
};

// JSON (de)serialization for the two record kinds.
std::string encode_generation_record(const infer::GenerationRecord& record);
infer::GenerationRecord decode_generation_record(const std::string& line);
std::string encode_scored_record(const ScoredRecord& record);
ScoredRecord decode_scored_record(const std::string& line);

enum class ExportFormat { csv, parquet };

// Lossless tabular projection of every response record. CSV follows
// RFC 4180; Parquet is uncompressed, plain-encoded, single row group.
void export_responses(const ResponseStore& store, const std::filesystem::path& out_path,
                      ExportFormat format);

// Re-import of the CSV export (round-trip check surface).
std::vector<infer::GenerationRecord> import_responses_csv(const std::filesystem::path& path);

}  // namespace clineval::store
