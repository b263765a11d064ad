#include "clinical_eval/parquet_writer.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace clineval::parquet {

namespace {

// ---- Thrift compact protocol (write-only subset) ----

class CompactWriter {
public:
    std::string buffer;

    void write_byte(uint8_t b) { buffer.push_back(static_cast<char>(b)); }

    void write_varint(uint64_t v) {
        while (v >= 0x80) {
            write_byte(static_cast<uint8_t>((v & 0x7F) | 0x80));
            v >>= 7;
        }
        write_byte(static_cast<uint8_t>(v));
    }

    static uint64_t zigzag(int64_t v) {
        return (static_cast<uint64_t>(v) << 1) ^ static_cast<uint64_t>(v >> 63);
    }

    // Compact type ids.
    static constexpr uint8_t kI32 = 5;
    static constexpr uint8_t kI64 = 6;
    static constexpr uint8_t kBinary = 8;
    static constexpr uint8_t kList = 9;
    static constexpr uint8_t kStruct = 12;

    void field_header(int16_t id, uint8_t type) {
        const int16_t delta = id - last_field_id_;
        if (delta > 0 && delta <= 15) {
            write_byte(static_cast<uint8_t>((delta << 4) | type));
        } else {
            write_byte(type);
            write_varint(zigzag(id));
        }
        last_field_id_ = id;
    }

    void i32_field(int16_t id, int32_t v) {
        field_header(id, kI32);
        write_varint(zigzag(v));
    }

    void i64_field(int16_t id, int64_t v) {
        field_header(id, kI64);
        write_varint(zigzag(v));
    }

    void string_field(int16_t id, const std::string& s) {
        field_header(id, kBinary);
        write_varint(s.size());
        buffer.append(s);
    }

    void list_field_header(int16_t id, uint8_t elem_type, size_t size) {
        field_header(id, kList);
        if (size < 15) {
            write_byte(static_cast<uint8_t>((size << 4) | elem_type));
        } else {
            write_byte(static_cast<uint8_t>(0xF0 | elem_type));
            write_varint(size);
        }
    }

    void struct_field_begin(int16_t id) {
        field_header(id, kStruct);
        field_stack_.push_back(last_field_id_);
        last_field_id_ = 0;
    }

    // Struct written as a list element (no field header).
    void struct_elem_begin() {
        field_stack_.push_back(last_field_id_);
        last_field_id_ = 0;
    }

    void struct_end() {
        write_byte(0);  // stop
        last_field_id_ = field_stack_.back();
        field_stack_.pop_back();
    }

private:
    int16_t last_field_id_ = 0;
    std::vector<int16_t> field_stack_;
};

// ---- Parquet enum values ----

constexpr int32_t kTypeInt64 = 2;
constexpr int32_t kTypeDouble = 5;
constexpr int32_t kTypeByteArray = 6;
constexpr int32_t kRepetitionOptional = 1;
constexpr int32_t kConvertedUtf8 = 0;
constexpr int32_t kEncodingPlain = 0;
constexpr int32_t kEncodingRle = 3;
constexpr int32_t kCodecUncompressed = 0;
constexpr int32_t kPageTypeData = 0;

void append_le(std::string& out, const void* data, size_t n) {
    out.append(static_cast<const char*>(data), n);
}

void append_u32(std::string& out, uint32_t v) {
    append_le(out, &v, 4);
}

// RLE-encode definition levels (bit width 1) as repeated runs.
std::string encode_def_levels(const std::vector<uint8_t>& levels) {
    std::string rle;
    size_t i = 0;
    while (i < levels.size()) {
        size_t j = i;
        while (j < levels.size() && levels[j] == levels[i]) ++j;
        const uint64_t run = j - i;
        uint64_t header = run << 1;
        while (header >= 0x80) {
            rle.push_back(static_cast<char>((header & 0x7F) | 0x80));
            header >>= 7;
        }
        rle.push_back(static_cast<char>(header));
        rle.push_back(static_cast<char>(levels[i]));
        i = j;
    }
    std::string out;
    append_u32(out, static_cast<uint32_t>(rle.size()));
    out.append(rle);
    return out;
}

int32_t physical_type(Column::Type t) {
    switch (t) {
        case Column::Type::byte_array: return kTypeByteArray;
        case Column::Type::f64: return kTypeDouble;
        case Column::Type::i64: return kTypeInt64;
    }
    throw std::logic_error("unreachable");
}

std::string plain_values(const Column& col) {
    std::string out;
    switch (col.type) {
        case Column::Type::byte_array:
            for (const auto& v : col.strings) {
                if (!v) continue;
                append_u32(out, static_cast<uint32_t>(v->size()));
                out.append(*v);
            }
            break;
        case Column::Type::f64:
            for (const auto& v : col.doubles) {
                if (!v) continue;
                append_le(out, &*v, 8);
            }
            break;
        case Column::Type::i64:
            for (const auto& v : col.ints) {
                if (!v) continue;
                append_le(out, &*v, 8);
            }
            break;
    }
    return out;
}

std::vector<uint8_t> def_levels(const Column& col) {
    std::vector<uint8_t> levels;
    auto fill = [&](const auto& values) {
        levels.reserve(values.size());
        for (const auto& v : values) levels.push_back(v ? 1 : 0);
    };
    switch (col.type) {
        case Column::Type::byte_array: fill(col.strings); break;
        case Column::Type::f64: fill(col.doubles); break;
        case Column::Type::i64: fill(col.ints); break;
    }
    return levels;
}

std::string encode_page_header(size_t page_size, size_t num_values) {
    CompactWriter w;
    w.i32_field(1, kPageTypeData);
    w.i32_field(2, static_cast<int32_t>(page_size));  // uncompressed
    w.i32_field(3, static_cast<int32_t>(page_size));  // compressed (same)
    w.struct_field_begin(5);                          // data_page_header
    w.i32_field(1, static_cast<int32_t>(num_values));
    w.i32_field(2, kEncodingPlain);
    w.i32_field(3, kEncodingRle);
    w.i32_field(4, kEncodingRle);
    w.struct_end();
    w.write_byte(0);  // PageHeader stop
    return w.buffer;
}

struct ChunkInfo {
    int64_t data_page_offset = 0;
    int64_t total_size = 0;
    int64_t num_values = 0;
};

}  // namespace

size_t Column::row_count() const {
    switch (type) {
        case Type::byte_array: return strings.size();
        case Type::f64: return doubles.size();
        case Type::i64: return ints.size();
    }
    return 0;
}

void Table::add_string_column(std::string name, std::vector<std::optional<std::string>> values) {
    Column c;
    c.name = std::move(name);
    c.type = Column::Type::byte_array;
    c.strings = std::move(values);
    columns.push_back(std::move(c));
}

void Table::add_double_column(std::string name, std::vector<std::optional<double>> values) {
    Column c;
    c.name = std::move(name);
    c.type = Column::Type::f64;
    c.doubles = std::move(values);
    columns.push_back(std::move(c));
}

void Table::add_int64_column(std::string name, std::vector<std::optional<int64_t>> values) {
    Column c;
    c.name = std::move(name);
    c.type = Column::Type::i64;
    c.ints = std::move(values);
    columns.push_back(std::move(c));
}

size_t Table::row_count() const {
    return columns.empty() ? 0 : columns.front().row_count();
}

void write_parquet(const Table& table, const std::filesystem::path& path) {
    for (const auto& col : table.columns) {
        if (col.row_count() != table.row_count()) {
            throw std::invalid_argument("parquet: ragged columns");
        }
    }

    std::string file = "PAR1";
    std::vector<ChunkInfo> chunks;
    chunks.reserve(table.columns.size());

    for (const auto& col : table.columns) {
        const auto levels = def_levels(col);
        std::string page = encode_def_levels(levels);
        page += plain_values(col);
        const std::string header = encode_page_header(page.size(), levels.size());

        ChunkInfo info;
        info.data_page_offset = static_cast<int64_t>(file.size());
        info.total_size = static_cast<int64_t>(header.size() + page.size());
        info.num_values = static_cast<int64_t>(levels.size());
        chunks.push_back(info);

        file += header;
        file += page;
    }

    // FileMetaData footer.
    CompactWriter w;
    w.i32_field(1, 1);  // version
    w.list_field_header(2, CompactWriter::kStruct, table.columns.size() + 1);
    {
        // root schema element
        w.struct_elem_begin();
        w.string_field(4, "schema");
        w.i32_field(5, static_cast<int32_t>(table.columns.size()));
        w.struct_end();
        for (const auto& col : table.columns) {
            w.struct_elem_begin();
            w.i32_field(1, physical_type(col.type));
            w.i32_field(3, kRepetitionOptional);
            w.string_field(4, col.name);
            if (col.type == Column::Type::byte_array) w.i32_field(6, kConvertedUtf8);
            w.struct_end();
        }
    }
    w.i64_field(3, static_cast<int64_t>(table.row_count()));
    w.list_field_header(4, CompactWriter::kStruct, 1);  // row_groups
    {
        w.struct_elem_begin();
        w.list_field_header(1, CompactWriter::kStruct, table.columns.size());  // columns
        int64_t total_bytes = 0;
        for (size_t i = 0; i < table.columns.size(); ++i) {
            const auto& col = table.columns[i];
            const auto& info = chunks[i];
            total_bytes += info.total_size;
            w.struct_elem_begin();  // ColumnChunk
            w.i64_field(2, info.data_page_offset);
            w.struct_field_begin(3);  // ColumnMetaData
            w.i32_field(1, physical_type(col.type));
            w.list_field_header(2, CompactWriter::kI32, 2);
            w.write_varint(CompactWriter::zigzag(kEncodingPlain));
            w.write_varint(CompactWriter::zigzag(kEncodingRle));
            w.list_field_header(3, CompactWriter::kBinary, 1);  // path_in_schema
            w.write_varint(col.name.size());
            w.buffer.append(col.name);
            w.i32_field(4, kCodecUncompressed);
            w.i64_field(5, info.num_values);
            w.i64_field(6, info.total_size);
            w.i64_field(7, info.total_size);
            w.i64_field(9, info.data_page_offset);
            w.struct_end();  // ColumnMetaData
            w.struct_end();  // ColumnChunk
        }
        w.i64_field(2, total_bytes);
        w.i64_field(3, static_cast<int64_t>(table.row_count()));
        w.struct_end();  // RowGroup
    }
    w.string_field(6, "clinical-eval parquet writer");
    w.write_byte(0);  // FileMetaData stop

    file += w.buffer;
    append_u32(file, static_cast<uint32_t>(w.buffer.size()));
    file += "PAR1";

    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("parquet: cannot open " + path.string());
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw std::runtime_error("parquet: write failed for " + path.string());
}

}  // namespace clineval::parquet
