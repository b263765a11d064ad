#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace clineval::parquet {

// Minimal Parquet v1 writer: plain encoding, uncompressed, one row
// group, one data page per column. Enough for the tabular exports; not
// a general-purpose library.
struct Column {
    enum class Type { byte_array, f64, i64 };
    std::string name;
    Type type;
    std::vector<std::optional<std::string>> strings;
    std::vector<std::optional<double>> doubles;
    std::vector<std::optional<int64_t>> ints;

    size_t row_count() const;
};

struct Table {
    std::vector<Column> columns;

    void add_string_column(std::string name, std::vector<std::optional<std::string>> values);
    void add_double_column(std::string name, std::vector<std::optional<double>> values);
    void add_int64_column(std::string name, std::vector<std::optional<int64_t>> values);
    size_t row_count() const;
};

void write_parquet(const Table& table, const std::filesystem::path& path);

}  // namespace clineval::parquet
