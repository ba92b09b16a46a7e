#pragma once

#include "hvarx/core.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hvarx {

/// One parsed CSV file: a header of series names and one row per time point.
struct SeriesTable {
    std::vector<std::string> names;
    Matrix values;                   // series x time
    std::vector<std::string> dates;  // filled when the first column is "date"
};

namespace csv {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Strict decimal parse: the whole cell must be consumed.
inline bool parse_double(std::string_view cell, double& out)
{
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

/// 17 significant digits, so the text reads back to the identical double.
inline std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace csv

/**
 * Parses a series table. `source` is used in error messages (usually the
 * file path). A leading column named "date" is kept as labels.
 */
inline SeriesTable parse_series_table(std::istream& in, const std::string& source)
{
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(source + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto header = csv::split(line);
    const bool has_date = !header.empty() && header.front() == "date";
    const std::size_t first = has_date ? 1 : 0;

    SeriesTable table;
    table.names.assign(header.begin() + first, header.end());
    for (const auto& n : table.names)
        if (n.empty()) throw ValidationError(source + ": empty series name in header");
    detail::require_unique(table.names, source);

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(line);
        if (cells.size() != header.size())
            throw ValidationError(source + ": line " + std::to_string(lineno) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        if (has_date) table.dates.push_back(cells[0]);
        std::vector<double> row(table.names.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
            const auto& cell = cells[first + j];
            const std::string where = source + ": line " + std::to_string(lineno) + ", column '" +
                                      table.names[j] + "'";
            if (cell.empty()) throw ValidationError(where + ": empty cell");
            if (!csv::parse_double(cell, row[j]))
                throw ValidationError(where + ": cannot parse '" + cell + "' as a number");
            if (!std::isfinite(row[j])) throw ValidationError(where + ": non-finite value");
        }
        rows.push_back(std::move(row));
    }

    table.values.resize(Index(table.names.size()), Index(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < table.names.size(); ++j) table.values(Index(j), Index(t)) = rows[t][j];
    return table;
}

inline SeriesTable read_series_table(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open file");
    return parse_series_table(in, path);
}

inline void write_series_table(std::ostream& out, const std::vector<std::string>& names,
                               const Matrix& values, const std::vector<std::string>& dates = {})
{
    const bool has_date = !dates.empty();
    if (has_date) out << "date";
    for (std::size_t j = 0; j < names.size(); ++j) out << (has_date || j > 0 ? "," : "") << names[j];
    out << '\n';
    for (Index t = 0; t < values.cols(); ++t) {
        if (has_date) out << dates[std::size_t(t)];
        for (Index j = 0; j < values.rows(); ++j)
            out << (has_date || j > 0 ? "," : "") << csv::format_double(values(j, t));
        out << '\n';
    }
}

/// Builds a centered dataset from an endogenous table and an optional
/// exogenous table (pass nullptr for a pure VAR).
inline VarxDataset load_and_center(const SeriesTable& endo, const SeriesTable* exog)
{
    if (exog && exog->values.cols() != endo.values.cols())
        throw ValidationError("exog: has " + std::to_string(exog->values.cols()) +
                              " time points but endo has " + std::to_string(endo.values.cols()));
    Matrix x = exog ? exog->values : Matrix(0, endo.values.cols());
    std::vector<std::string> xn = exog ? exog->names : std::vector<std::string>{};
    return make_dataset(endo.values, endo.names, std::move(x), std::move(xn), endo.dates);
}

inline void write_dataset(const VarxDataset& data, const std::string& endo_path,
                          const std::string& exog_path)
{
    std::ofstream e(endo_path);
    if (!e) throw ValidationError(endo_path + ": cannot open for writing");
    write_series_table(e, data.endo_names, data.raw_endo(), data.dates);
    if (data.m() > 0 && !exog_path.empty()) {
        std::ofstream x(exog_path);
        if (!x) throw ValidationError(exog_path + ": cannot open for writing");
        write_series_table(x, data.exog_names, data.raw_exog(), data.dates);
    }
}

} // namespace hvarx
