#pragma once

#include "ddisac/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace ddisac::bench {

using CsvField = std::variant<std::string, double, long long>;

inline std::string format_field(const CsvField& f) {
    if (const auto* s = std::get_if<std::string>(&f)) return *s;
    if (const auto* i = std::get_if<long long>(&f)) return std::to_string(*i);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(f));
    return buf;
}

/// Buffered CSV table with a fixed header; written in one go.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<CsvField> row) {
        if (row.size() != header_.size()) throw std::invalid_argument("CsvTable: row width differs from header");
        rows_.push_back(std::move(row));
    }

    std::size_t rows() const noexcept { return rows_.size(); }
    const std::vector<std::string>& header() const noexcept { return header_; }

    std::string str() const {
        std::string out;
        auto line = [&out](const auto& cells, auto&& fmt) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += fmt(cells[i]);
            }
            out += '\n';
        };
        line(header_, [](const std::string& s) { return s; });
        for (const auto& r : rows_) line(r, format_field);
        return out;
    }

    void write(const std::filesystem::path& path) const {
        std::error_code ec;
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << str();
        if (!out) throw IoError("write failed for '" + path.string() + "'");
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<CsvField>> rows_;
};

}  // namespace ddisac::bench
