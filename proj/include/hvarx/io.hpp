#pragma once

#include "hvarx/core.hpp"
#include "hvarx/csv.hpp"
#include "hvarx/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace hvarx::io {

/// Flat coefficient table: equation,series,lag,block,value with one row per
/// entry of Phi (block "endo") and B (block "exo"), zeros included.
inline void write_coefficients(std::ostream& out, const CoefficientSet& c,
                               const std::vector<std::string>& endo_names,
                               const std::vector<std::string>& exog_names)
{
    out << "equation,series,lag,block,value\n";
    for (Index i = 0; i < c.k(); ++i) {
        for (int l = 1; l <= c.spec.p; ++l)
            for (Index d = 0; d < c.k(); ++d)
                out << endo_names[std::size_t(i)] << ',' << endo_names[std::size_t(d)] << ',' << l << ",endo,"
                    << csv::format_double(c.phi(i, d, l)) << '\n';
        for (int l = 1; l <= c.spec.s; ++l)
            for (Index r = 0; r < c.m(); ++r)
                out << endo_names[std::size_t(i)] << ',' << exog_names[std::size_t(r)] << ',' << l << ",exo,"
                    << csv::format_double(c.b(i, r, l)) << '\n';
    }
}

/// series,block,mean for the centering constants stored with a fit.
inline void write_means(std::ostream& out, const CoefficientSet& c, const std::vector<std::string>& endo_names,
                        const std::vector<std::string>& exog_names)
{
    out << "series,block,mean\n";
    for (Index i = 0; i < c.endo_means.size(); ++i)
        out << endo_names[std::size_t(i)] << ",endo," << csv::format_double(c.endo_means(i)) << '\n';
    for (Index r = 0; r < c.exog_means.size(); ++r)
        out << exog_names[std::size_t(r)] << ",exo," << csv::format_double(c.exog_means(r)) << '\n';
}

struct ParsedCoefficients {
    CoefficientSet coefficients;
    std::vector<std::string> endo_names;
    std::vector<std::string> exog_names;
};

/**
 * Reads back a table produced by write_coefficients (and optionally
 * write_means). Series order follows first appearance; dimensions are
 * inferred from the largest lag seen in each block.
 */
inline ParsedCoefficients read_coefficients(std::istream& coef_in, const std::string& source,
                                            std::istream* means_in = nullptr)
{
    std::string line;
    if (!std::getline(coef_in, line)) throw ValidationError(source + ": empty file");
    struct Row {
        std::string eq, series;
        int lag;
        bool endo;
        double value;
    };
    std::vector<Row> rows;
    std::vector<std::string> eqs, endo_series, exo_series;
    auto note = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    int p = 0, s = 0;
    std::size_t lineno = 1;
    while (std::getline(coef_in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto cells = csv::split(line);
        const std::string where = source + ": line " + std::to_string(lineno);
        if (cells.size() != 5) throw ValidationError(where + ": expected 5 cells");
        Row r;
        r.eq = cells[0];
        r.series = cells[1];
        double lag = 0;
        if (!csv::parse_double(cells[2], lag) || lag < 1 || lag != std::floor(lag))
            throw ValidationError(where + ": column 'lag' must be a positive integer");
        r.lag = int(lag);
        if (cells[3] != "endo" && cells[3] != "exo")
            throw ValidationError(where + ": column 'block' must be endo or exo");
        r.endo = cells[3] == "endo";
        if (!csv::parse_double(cells[4], r.value)) throw ValidationError(where + ": column 'value' is not a number");
        note(eqs, r.eq);
        note(r.endo ? endo_series : exo_series, r.series);
        (r.endo ? p : s) = std::max(r.endo ? p : s, r.lag);
        rows.push_back(std::move(r));
    }
    ParsedCoefficients out;
    out.endo_names = eqs;
    for (const auto& n : endo_series) note(out.endo_names, n);
    out.exog_names = exo_series;
    const Index k = Index(out.endo_names.size()), m = Index(out.exog_names.size());
    out.coefficients = CoefficientSet::zeros(k, m, VarxSpec{std::max(p, 1), s});
    auto pos = [](const std::vector<std::string>& v, const std::string& x) {
        return Index(std::find(v.begin(), v.end(), x) - v.begin());
    };
    for (const auto& r : rows) {
        const Index i = pos(out.endo_names, r.eq);
        if (r.endo)
            out.coefficients.Phi(i, (r.lag - 1) * k + pos(out.endo_names, r.series)) = r.value;
        else
            out.coefficients.B(i, (r.lag - 1) * m + pos(out.exog_names, r.series)) = r.value;
    }
    if (means_in) {
        std::getline(*means_in, line);
        while (std::getline(*means_in, line)) {
            if (csv::trim(line).empty()) continue;
            const auto cells = csv::split(line);
            double v = 0;
            if (cells.size() != 3 || !csv::parse_double(cells[2], v))
                throw ValidationError(source + ": malformed means row '" + line + "'");
            if (cells[1] == "endo") out.coefficients.endo_means(pos(out.endo_names, cells[0])) = v;
            else out.coefficients.exog_means(pos(out.exog_names, cells[0])) = v;
        }
    }
    return out;
}

/// Lag matrix as CSV with row and column headers from series names.
inline void write_lag_matrix(std::ostream& out, const IntMatrix& L, const std::vector<std::string>& row_names,
                             const std::vector<std::string>& col_names)
{
    out << "equation";
    for (const auto& c : col_names) out << ',' << c;
    out << '\n';
    for (Index i = 0; i < L.rows(); ++i) {
        out << row_names[std::size_t(i)];
        for (Index j = 0; j < L.cols(); ++j) out << ',' << L(i, j);
        out << '\n';
    }
}

/// Long-format heatmap data: row_label,col_label,value.
inline void write_heatmap(std::ostream& out, const IntMatrix& L, const std::vector<std::string>& row_names,
                          const std::vector<std::string>& col_names)
{
    out << "row_label,col_label,value\n";
    for (Index i = 0; i < L.rows(); ++i)
        for (Index j = 0; j < L.cols(); ++j)
            out << row_names[std::size_t(i)] << ',' << col_names[std::size_t(j)] << ',' << L(i, j) << '\n';
}

} // namespace hvarx::io
