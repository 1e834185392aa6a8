#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace decaynet {

/// Decimal (never scientific) rendering with `digits` significant digits.
/// Trailing zeros are trimmed; non-finite values render as `inf`, `-inf`, `nan`.
inline std::string format_decimal(double v, int digits = 10) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    const int magnitude = static_cast<int>(std::floor(std::log10(std::fabs(v))));
    const int precision = std::max(0, digits - 1 - magnitude);
    std::array<char, 512> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                   std::chars_format::fixed, precision);
    if (ec != std::errc{}) return "nan";
    std::string s(buf.data(), end);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

/// Line-oriented CSV writer. Opening creates missing parent directories.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::string_view header) : path_(path.string()) {
        std::error_code ec;
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
        out_.open(path, std::ios::out | std::ios::trunc | std::ios::binary);
        if (!out_) throw IoError(path_, "cannot open for writing");
        out_ << header << '\n';
    }

    CsvWriter& field(double v) { return raw(format_decimal(v)); }
    CsvWriter& field(std::uint64_t v) { return raw(std::to_string(v)); }
    CsvWriter& field(std::int64_t v) { return raw(std::to_string(v)); }
    CsvWriter& field(int v) { return raw(std::to_string(v)); }
    CsvWriter& field(std::string_view v) { return raw(std::string(v)); }
    CsvWriter& empty() { return raw(""); }

    void end_row() {
        out_ << '\n';
        first_ = true;
        if (!out_) throw IoError(path_, "write failed");
    }

    void close() {
        out_.close();
        if (out_.fail()) throw IoError(path_, "close failed");
    }

private:
    CsvWriter& raw(const std::string& s) {
        if (!first_) out_ << ',';
        out_ << s;
        first_ = false;
        return *this;
    }

    std::string path_;
    std::ofstream out_;
    bool first_ = true;
};

} // namespace decaynet
