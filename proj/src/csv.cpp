#include "resprep/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "resprep/errors.hpp"

#ifndef RESPREP_VERSION
#define RESPREP_VERSION "unknown"
#endif

namespace resprep {

std::string format_number(double value)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0.0 ? "inf" : "-inf";
    }
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.12g", value);
    return buffer;
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value)
{
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
    return buffer;
}

std::string code_version()
{
    return RESPREP_VERSION;
}

void CsvTable::add_meta(std::string key, std::string value)
{
    meta_.emplace_back(std::move(key), std::move(value));
}

void CsvTable::add_column(std::string name, std::string unit, std::vector<double> values)
{
    columns_.push_back({std::move(name), std::move(unit), std::move(values)});
}

void CsvTable::add_text_column(std::string name, std::vector<std::string> values)
{
    columns_.push_back({std::move(name), "", std::move(values)});
}

std::size_t CsvTable::rows() const
{
    if (columns_.empty()) {
        return 0;
    }
    return std::visit([](const auto& v) { return v.size(); }, columns_.front().values);
}

std::size_t CsvTable::column_index(std::string_view name) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) {
            return i;
        }
    }
    throw InvalidArgument("CsvTable " + title_ + ": no column '" + std::string(name) + "'");
}

const std::vector<double>& CsvTable::numbers(std::string_view column) const
{
    const auto& c = columns_[column_index(column)];
    if (const auto* v = std::get_if<std::vector<double>>(&c.values)) {
        return *v;
    }
    throw InvalidArgument("CsvTable " + title_ + ": column '" + c.name + "' is not numeric");
}

double CsvTable::number(std::string_view column, std::size_t row) const
{
    const auto& v = numbers(column);
    if (row >= v.size()) {
        throw InvalidArgument("CsvTable " + title_ + ": row out of range");
    }
    return v[row];
}

void CsvTable::write(std::ostream& out) const
{
    const std::size_t n = rows();
    for (const auto& c : columns_) {
        if (std::visit([](const auto& v) { return v.size(); }, c.values) != n) {
            throw InvalidArgument("CsvTable " + title_ + ": column '" + c.name + "' has the wrong length");
        }
    }
    out << "# table: " << title_ << '\n';
    out << "# units:";
    for (const auto& c : columns_) {
        out << ' ' << c.name << '=' << (c.unit.empty() ? "text" : c.unit);
    }
    out << '\n';
    for (const auto& [key, value] : meta_) {
        out << "# " << key << ": " << value << '\n';
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        out << (i ? "," : "") << columns_[i].name;
        if (!columns_[i].unit.empty()) {
            out << '[' << columns_[i].unit << ']';
        }
    }
    out << '\n';
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            out << (i ? "," : "");
            std::visit(
                [&](const auto& v) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::vector<double>>) {
                        out << format_number(v[r]);
                    } else {
                        out << v[r];
                    }
                },
                columns_[i].values);
        }
        out << '\n';
    }
}

}  // namespace resprep
