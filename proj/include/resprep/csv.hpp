#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace resprep {

/// Decimal with 12 significant digits; "nan", "inf" and "-inf" otherwise.
std::string format_number(double value);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

std::string hex64(std::uint64_t value);

/// Version string written into every output file.
std::string code_version();

/// Column-oriented table written as '#' metadata lines, a header row of
/// "name[unit]" cells and the data rows.
class CsvTable {
public:
    explicit CsvTable(std::string title) : title_(std::move(title)) {}

    void add_meta(std::string key, std::string value);
    void add_column(std::string name, std::string unit, std::vector<double> values);
    void add_text_column(std::string name, std::vector<std::string> values);

    const std::string& title() const { return title_; }
    std::size_t rows() const;
    std::size_t columns() const { return columns_.size(); }
    /// Throws InvalidArgument for an unknown column.
    std::size_t column_index(std::string_view name) const;
    double number(std::string_view column, std::size_t row) const;
    const std::vector<double>& numbers(std::string_view column) const;

    /// Throws InvalidArgument when the columns differ in length.
    void write(std::ostream& out) const;

private:
    struct Column {
        std::string name;
        std::string unit;
        std::variant<std::vector<double>, std::vector<std::string>> values;
    };
    std::string title_;
    std::vector<std::pair<std::string, std::string>> meta_;
    std::vector<Column> columns_;
};

}  // namespace resprep
