#include "clinical_eval/run_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clinical_eval/parquet_writer.hpp"

namespace clineval::store {

using json = nlohmann::json;
using infer::GenerationRecord;
using infer::RunStatus;

namespace {

// Fault-injection hook: abort the process (as a crash would) right
// after the k-th acknowledged append.
void fault_hook_tick() {
    static std::atomic<long> remaining{[] {
        const char* env = std::getenv("CLINICAL_EVAL_FAULT_ABORT_AFTER_APPENDS");
        return env ? std::atol(env) : -1;
    }()};
    if (remaining.load() < 0) return;
    if (remaining.fetch_sub(1) - 1 <= 0) _exit(3);
}

}  // namespace

JsonlFile::JsonlFile(const std::filesystem::path& path) : path_(path) {
    // Scan existing content, keeping only intact lines.
    std::uintmax_t good_offset = 0;
    if (std::filesystem::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw StorageError("cannot open store file: " + path.string());
        std::string buffer((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        size_t pos = 0;
        while (pos < buffer.size()) {
            const size_t nl = buffer.find('\n', pos);
            if (nl == std::string::npos) break;  // torn line, no newline
            std::string line = buffer.substr(pos, nl - pos);
            if (!json::accept(line)) break;  // torn or corrupt line
            lines_.push_back(std::move(line));
            pos = nl + 1;
            good_offset = pos;
        }
        if (good_offset != buffer.size()) {
            std::filesystem::resize_file(path, good_offset);
        }
    }
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) throw StorageError("cannot open store file for append: " + path.string());
}

JsonlFile::~JsonlFile() {
    if (fd_ >= 0) ::close(fd_);
}

JsonlFile::JsonlFile(JsonlFile&& other) noexcept
    : path_(std::move(other.path_)), fd_(other.fd_), lines_(std::move(other.lines_)) {
    other.fd_ = -1;
}

JsonlFile& JsonlFile::operator=(JsonlFile&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        path_ = std::move(other.path_);
        fd_ = other.fd_;
        lines_ = std::move(other.lines_);
        other.fd_ = -1;
    }
    return *this;
}

void JsonlFile::append(const std::string& json_line) {
    std::string data = json_line;
    data.push_back('\n');
    size_t written = 0;
    while (written < data.size()) {
        const ssize_t n = ::write(fd_, data.data() + written, data.size() - written);
        if (n < 0) throw StorageError("write failed for " + path_.string());
        written += static_cast<size_t>(n);
    }
    if (::fsync(fd_) != 0) throw StorageError("fsync failed for " + path_.string());
    lines_.push_back(json_line);
    fault_hook_tick();
}

std::string encode_generation_record(const GenerationRecord& r) {
    json obj = {
        {"model_id", r.model_id},
        {"question_id", r.question_id},
        {"run_index", r.run_index},
        {"response_text", r.response_text},
        {"latency_ms", r.latency_ms},
        {"tokens_per_second", r.tokens_per_second ? json(*r.tokens_per_second) : json(nullptr)},
        {"tokens_per_second_estimated", r.tokens_per_second_estimated},
        {"attempt_count", r.attempt_count},
        {"timestamp_utc", r.timestamp_utc},
        {"status", infer::to_string(r.status)},
        {"error_detail", r.error_detail ? json(*r.error_detail) : json(nullptr)},
    };
    return obj.dump();
}

GenerationRecord decode_generation_record(const std::string& line) {
    const json obj = json::parse(line);
    GenerationRecord r;
    r.model_id = obj.at("model_id").get<std::string>();
    r.question_id = obj.at("question_id").get<std::string>();
    r.run_index = obj.at("run_index").get<int>();
    r.response_text = obj.at("response_text").get<std::string>();
    r.latency_ms = obj.at("latency_ms").get<double>();
    if (!obj.at("tokens_per_second").is_null()) {
        r.tokens_per_second = obj.at("tokens_per_second").get<double>();
    }
    r.tokens_per_second_estimated = obj.at("tokens_per_second_estimated").get<bool>();
    r.attempt_count = obj.at("attempt_count").get<int>();
    r.timestamp_utc = obj.at("timestamp_utc").get<std::string>();
    r.status = infer::run_status_from_string(obj.at("status").get<std::string>());
    if (!obj.at("error_detail").is_null()) {
        r.error_detail = obj.at("error_detail").get<std::string>();
    }
    return r;
}

std::string encode_scored_record(const ScoredRecord& r) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json obj = {
        {"model_id", r.key.model_id},
        {"question_id", r.key.question_id},
        {"run_index", r.key.run_index},
        {"exact_match", r.scores.exact_match},
        {"token_f1", r.scores.token_f1},
        {"string_similarity", r.scores.string_similarity},
        {"bleu", r.scores.bleu},
        {"rouge_l_f1", r.scores.rouge_l_f1},
        {"semantic_precision", opt(r.scores.semantic_precision)},
        {"semantic_recall", opt(r.scores.semantic_recall)},
        {"semantic_f1", opt(r.scores.semantic_f1)},
        {"judge_score", opt(r.scores.judge_score)},
        {"judge_raw", r.scores.judge_raw},
        {"judge_parse_method", r.judge_parse_method},
        {"semantic_error", r.semantic_error ? json(*r.semantic_error) : json(nullptr)},
    };
    return obj.dump();
}

ScoredRecord decode_scored_record(const std::string& line) {
    const json obj = json::parse(line);
    ScoredRecord r;
    r.key.model_id = obj.at("model_id").get<std::string>();
    r.key.question_id = obj.at("question_id").get<std::string>();
    r.key.run_index = obj.at("run_index").get<int>();
    r.scores.exact_match = obj.at("exact_match").get<int>();
    r.scores.token_f1 = obj.at("token_f1").get<double>();
    r.scores.string_similarity = obj.at("string_similarity").get<double>();
    r.scores.bleu = obj.at("bleu").get<double>();
    r.scores.rouge_l_f1 = obj.at("rouge_l_f1").get<double>();
    auto opt = [&](const char* key) -> std::optional<double> {
        if (obj.at(key).is_null()) return std::nullopt;
        return obj.at(key).get<double>();
    };
    r.scores.semantic_precision = opt("semantic_precision");
    r.scores.semantic_recall = opt("semantic_recall");
    r.scores.semantic_f1 = opt("semantic_f1");
    r.scores.judge_score = opt("judge_score");
    r.scores.judge_raw = obj.at("judge_raw").get<std::string>();
    r.judge_parse_method = obj.at("judge_parse_method").get<std::string>();
    if (!obj.at("semantic_error").is_null()) {
        r.semantic_error = obj.at("semantic_error").get<std::string>();
    }
    return r;
}

ResponseStore::ResponseStore(const std::filesystem::path& path) : file_(path) {
    for (const auto& line : file_.lines()) {
        auto record = decode_generation_record(line);
        if (record.status == RunStatus::ok) {
            ok_keys_.insert({record.model_id, record.question_id, record.run_index});
        }
        records_.push_back(std::move(record));
    }
}

void ResponseStore::append(const GenerationRecord& record) {
    const RunKey key{record.model_id, record.question_id, record.run_index};
    if (ok_keys_.contains(key)) {
        throw DuplicateKeyError("ok record already stored for (" + key.model_id + ", " +
                                key.question_id + ", " + std::to_string(key.run_index) + ")");
    }
    file_.append(encode_generation_record(record));
    if (record.status == RunStatus::ok) ok_keys_.insert(key);
    records_.push_back(record);
}

std::set<RunKey> ResponseStore::completed_keys() const {
    return ok_keys_;
}

std::map<RunKey, GenerationRecord> ResponseStore::effective_records() const {
    std::map<RunKey, GenerationRecord> out;
    for (const auto& record : records_) {
        const RunKey key{record.model_id, record.question_id, record.run_index};
        auto it = out.find(key);
        if (it == out.end()) {
            out.emplace(key, record);
        } else if (it->second.status != RunStatus::ok) {
            it->second = record;  // ok wins; otherwise keep the latest failure
        }
    }
    return out;
}

ScoreStore::ScoreStore(const std::filesystem::path& path, bool truncate) {
    if (truncate && std::filesystem::exists(path)) std::filesystem::remove(path);
    file_ = JsonlFile(path);
    for (const auto& line : file_.lines()) {
        auto record = decode_scored_record(line);
        keys_.insert(record.key);
        records_.push_back(std::move(record));
    }
}

void ScoreStore::append(const ScoredRecord& record) {
    if (!keys_.insert(record.key).second) {
        throw DuplicateKeyError("score already stored for (" + record.key.model_id + ", " +
                                record.key.question_id + ", " +
                                std::to_string(record.key.run_index) + ")");
    }
    file_.append(encode_scored_record(record));
    records_.push_back(record);
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

const std::vector<std::string> kResponseColumns = {
    "model_id",       "question_id",   "run_index",
    "response_text",  "latency_ms",    "tokens_per_second",
    "tokens_per_second_estimated",     "attempt_count",
    "timestamp_utc",  "status",        "error_detail",
};

void export_csv(const ResponseStore& store, const std::filesystem::path& out_path) {
    std::ofstream out(out_path, std::ios::trunc | std::ios::binary);
    if (!out) throw StorageError("cannot open export file: " + out_path.string());
    for (size_t i = 0; i < kResponseColumns.size(); ++i) {
        if (i) out << ',';
        out << kResponseColumns[i];
    }
    out << "\r\n";
    for (const auto& r : store.records()) {
        out << csv_escape(r.model_id) << ',' << csv_escape(r.question_id) << ',' << r.run_index
            << ',' << csv_escape(r.response_text) << ',' << format_double(r.latency_ms) << ','
            << (r.tokens_per_second ? format_double(*r.tokens_per_second) : "") << ','
            << (r.tokens_per_second_estimated ? "true" : "false") << ',' << r.attempt_count << ','
            << csv_escape(r.timestamp_utc) << ',' << infer::to_string(r.status) << ','
            << (r.error_detail ? csv_escape(*r.error_detail) : "") << "\r\n";
    }
    if (!out) throw StorageError("write failed for " + out_path.string());
}

void export_parquet_file(const ResponseStore& store, const std::filesystem::path& out_path) {
    parquet::Table table;
    auto& records = store.records();
    auto strings = [&](auto get) {
        std::vector<std::optional<std::string>> col;
        col.reserve(records.size());
        for (const auto& r : records) col.push_back(get(r));
        return col;
    };
    auto doubles = [&](auto get) {
        std::vector<std::optional<double>> col;
        col.reserve(records.size());
        for (const auto& r : records) col.push_back(get(r));
        return col;
    };
    auto ints = [&](auto get) {
        std::vector<std::optional<int64_t>> col;
        col.reserve(records.size());
        for (const auto& r : records) col.push_back(get(r));
        return col;
    };
    table.add_string_column("model_id", strings([](auto& r) { return r.model_id; }));
    table.add_string_column("question_id", strings([](auto& r) { return r.question_id; }));
    table.add_int64_column("run_index", ints([](auto& r) { return r.run_index; }));
    table.add_string_column("response_text", strings([](auto& r) { return r.response_text; }));
    table.add_double_column("latency_ms", doubles([](auto& r) { return r.latency_ms; }));
    table.add_double_column("tokens_per_second", doubles([](auto& r) {
        return r.tokens_per_second ? std::optional<double>(*r.tokens_per_second) : std::nullopt;
    }));
    table.add_int64_column("tokens_per_second_estimated", ints([](auto& r) {
        return static_cast<int64_t>(r.tokens_per_second_estimated ? 1 : 0);
    }));
    table.add_int64_column("attempt_count", ints([](auto& r) { return r.attempt_count; }));
    table.add_string_column("timestamp_utc", strings([](auto& r) { return r.timestamp_utc; }));
    table.add_string_column("status", strings([](auto& r) { return infer::to_string(r.status); }));
    table.add_string_column("error_detail", strings([](auto& r) {
        return r.error_detail ? std::optional<std::string>(*r.error_detail) : std::nullopt;
    }));
    parquet::write_parquet(table, out_path);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& data) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    size_t i = 0;
    while (i < data.size()) {
        const char c = data[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            ++i;
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
        } else {
            field.push_back(c);
        }
        ++i;
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void export_responses(const ResponseStore& store, const std::filesystem::path& out_path,
                      ExportFormat format) {
    if (format == ExportFormat::csv) {
        export_csv(store, out_path);
    } else {
        export_parquet_file(store, out_path);
    }
}

std::vector<GenerationRecord> import_responses_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open csv file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = parse_csv(data);
    if (rows.empty()) throw StorageError("csv file has no header: " + path.string());
    if (rows.front() != kResponseColumns) {
        throw StorageError("unexpected csv header in " + path.string());
    }
    std::vector<GenerationRecord> out;
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != kResponseColumns.size()) {
            throw StorageError("csv row " + std::to_string(i + 1) + " has " +
                               std::to_string(row.size()) + " fields");
        }
        GenerationRecord r;
        r.model_id = row[0];
        r.question_id = row[1];
        r.run_index = std::stoi(row[2]);
        r.response_text = row[3];
        r.latency_ms = std::stod(row[4]);
        if (!row[5].empty()) r.tokens_per_second = std::stod(row[5]);
        r.tokens_per_second_estimated = row[6] == "true";
        r.attempt_count = std::stoi(row[7]);
        r.timestamp_utc = row[8];
        r.status = infer::run_status_from_string(row[9]);
        if (!row[10].empty()) r.error_detail = row[10];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace clineval::store
