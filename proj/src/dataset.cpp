#include "clinical_eval/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "clinical_eval/text_metrics.hpp"

namespace clineval::dataset {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool blank(const std::string& text) {
    return metrics::normalize(text).empty();
}

std::optional<std::string> optional_field(const json& row, const char* key) {
    auto it = row.find(key);
    if (it == row.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

LoadResult load_flat(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file: " + path.string());

    LoadResult result;
    std::unordered_set<std::string> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        QAItem item;
        try {
            item.question_id = row.at("question_id").get<std::string>();
            item.question = row.at("question").get<std::string>();
            item.gold_answer = row.at("gold_answer").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        item.focus_area = optional_field(row, "focus_area");
        item.source = optional_field(row, "source");
        if (!seen.insert(item.question_id).second) {
            throw DuplicateIdError("duplicate question_id '" + item.question_id + "' at " +
                                   path.string() + ":" + std::to_string(line_no));
        }
        if (blank(item.question) || blank(item.gold_answer)) {
            ++result.skipped;
            continue;
        }
        result.items.push_back(std::move(item));
    }
    return result;
}

void write_flat(const fs::path& path, const std::vector<QAItem>& items) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot open for writing: " + path.string());
    for (const auto& item : items) {
        json row = {{"question_id", item.question_id},
                    {"question", item.question},
                    {"gold_answer", item.gold_answer},
                    {"focus_area", item.focus_area ? json(*item.focus_area) : json(nullptr)},
                    {"source", item.source ? json(*item.source) : json(nullptr)}};
        out << row.dump() << '\n';
    }
}

IngestResult ingest_medquad_xml(const fs::path& directory) {
    IngestResult result;
    if (!fs::exists(directory)) return result;

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        boost::property_tree::ptree doc;
        try {
            boost::property_tree::read_xml(file.string(), doc);
        } catch (const boost::property_tree::xml_parser_error&) {
            ++result.skipped_files;
            continue;
        }
        auto document = doc.get_child_optional("Document");
        if (!document) {
            ++result.skipped_files;
            continue;
        }
        const auto doc_id =
            document->get<std::string>("<xmlattr>.id", file.stem().string());
        const auto source = document->get_optional<std::string>("<xmlattr>.source");
        const auto focus = document->get_optional<std::string>("Focus");

        auto pairs = document->get_child_optional("QAPairs");
        if (!pairs) continue;
        size_t ordinal = 0;
        for (const auto& [name, pair] : *pairs) {
            if (name != "QAPair") continue;
            ++ordinal;
            QAItem item;
            const auto pid = pair.get_optional<std::string>("<xmlattr>.pid");
            item.question_id = doc_id + "#" + (pid ? *pid : std::to_string(ordinal));
            item.question = pair.get<std::string>("Question", "");
            item.gold_answer = pair.get<std::string>("Answer", "");
            if (focus) item.focus_area = *focus;
            if (source) item.source = *source;
            if (blank(item.question) || blank(item.gold_answer)) {
                ++result.skipped_pairs;
                continue;
            }
            result.items.push_back(std::move(item));
        }
    }
    return result;
}

uint64_t sample_hash(int64_t seed, const std::string& question_id) {
    constexpr uint64_t kOffset = 14695981039346656037ULL;
    constexpr uint64_t kPrime = 1099511628211ULL;
    uint64_t h = kOffset;
    auto mix = [&](const std::string& bytes) {
        for (unsigned char b : bytes) {
            h ^= b;
            h *= kPrime;
        }
    };
    mix(std::to_string(seed));
    h ^= 0x1F;
    h *= kPrime;
    mix(question_id);
    return h;
}

std::vector<QAItem> sample(std::vector<QAItem> items, size_t n, int64_t seed) {
    std::sort(items.begin(), items.end(), [seed](const QAItem& a, const QAItem& b) {
        const uint64_t ha = sample_hash(seed, a.question_id);
        const uint64_t hb = sample_hash(seed, b.question_id);
        if (ha != hb) return ha < hb;
        return a.question_id < b.question_id;
    });
    if (items.size() > n) items.resize(n);
    return items;
}

}  // namespace clineval::dataset
