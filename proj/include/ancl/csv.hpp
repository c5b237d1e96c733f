#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ancl/affinity.hpp"
#include "ancl/errors.hpp"
#include "ancl/features.hpp"
#include "ancl/partition.hpp"

namespace ancl {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // data rows, header excluded
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

/// Lossless double formatting for CSV output.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& text, std::size_t line, std::size_t column,
                           const std::string& context) {
    if (text.empty()) {
        throw DataError(context + ": missing value at row " + std::to_string(line) + ", column " +
                        std::to_string(column));
    }
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &consumed);
    } catch (const std::exception&) {
        throw DataError(context + ": '" + text + "' at row " + std::to_string(line) + ", column " +
                        std::to_string(column) + " is not a number");
    }
    if (consumed != text.size()) {
        throw DataError(context + ": '" + text + "' at row " + std::to_string(line) + ", column " +
                        std::to_string(column) + " is not a number");
    }
    return value;
}

}  // namespace detail

/// Reads a comma-separated file with a header row; every data row must have
/// the header's field count (ragged rows are reported with their 1-based file
/// line number).
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        auto fields = detail::split_csv_line(line);
        if (line_no == 1) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size()) {
                throw DataError("'" + path + "': row at line " + std::to_string(line_no) + " has " +
                                std::to_string(fields.size()) + " fields, expected " +
                                std::to_string(table.header.size()));
            }
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty()) throw DataError("'" + path + "': missing header row");
    return table;
}

// ---------------------------------------------------------------------------
// Feature CSV: optional leading "id" and "label" columns, then one column per
// feature component (named like acf_1 or qaf_0.1_0.9_2), one row per series.
// ---------------------------------------------------------------------------

struct FeatureCsv {
    std::vector<std::string> columns;  // feature component names
    std::vector<std::string> ids;      // empty when the file has no id column
    std::vector<int> labels;           // empty when the file has no label column
    PointSet rows;
};

inline void write_feature_csv(const std::string& path, const std::vector<std::string>& component_names,
                              const PointSet& rows, const std::vector<std::string>* ids = nullptr,
                              const std::vector<int>* labels = nullptr) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    std::string header;
    if (ids) header += "id,";
    if (labels) header += "label,";
    for (std::size_t c = 0; c < component_names.size(); ++c) {
        header += component_names[c];
        if (c + 1 < component_names.size()) header += ',';
    }
    out << header << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string line;
        if (ids) line += (*ids)[r] + ",";
        if (labels) line += std::to_string((*labels)[r]) + ",";
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            line += detail::format_double(rows[r][c]);
            if (c + 1 < rows[r].size()) line += ',';
        }
        out << line << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

inline FeatureCsv read_feature_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    FeatureCsv result;
    std::size_t first_feature = 0;
    bool has_id = false, has_label = false;
    if (first_feature < table.header.size() && table.header[first_feature] == "id") {
        has_id = true;
        ++first_feature;
    }
    if (first_feature < table.header.size() && table.header[first_feature] == "label") {
        has_label = true;
        ++first_feature;
    }
    if (first_feature >= table.header.size()) throw DataError("'" + path + "': no feature columns");
    result.columns.assign(table.header.begin() + static_cast<std::ptrdiff_t>(first_feature), table.header.end());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t col = 0;
        if (has_id) result.ids.push_back(row[col++]);
        if (has_label) {
            result.labels.push_back(static_cast<int>(
                detail::parse_double(row[col], r + 2, col + 1, "'" + path + "'")));
            ++col;
        }
        std::vector<double> values;
        values.reserve(result.columns.size());
        for (; col < row.size(); ++col) {
            values.push_back(detail::parse_double(row[col], r + 2, col + 1, "'" + path + "'"));
        }
        result.rows.push_back(std::move(values));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Affinity CSV: a bare n x n numeric matrix, no header.
// ---------------------------------------------------------------------------

inline void write_affinity_csv(const std::string& path, const AffinityMatrix& a) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < a.n; ++i) {
        std::string line;
        for (std::size_t j = 0; j < a.n; ++j) {
            line += detail::format_double(a.at(i, j));
            if (j + 1 < a.n) line += ',';
        }
        out << line << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

inline AffinityMatrix read_affinity_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            row.push_back(detail::parse_double(fields[c], line_no, c + 1, "'" + path + "'"));
        }
        rows.push_back(std::move(row));
    }
    const std::size_t n = rows.size();
    if (n == 0) throw DataError("'" + path + "': empty affinity matrix");
    AffinityMatrix a(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) {
            throw DataError("'" + path + "': affinity matrix is not square at row " + std::to_string(i + 1));
        }
        for (std::size_t j = 0; j < n; ++j) a.at(i, j) = rows[i][j];
    }
    a.validate();
    return a;
}

// ---------------------------------------------------------------------------
// Partition CSV: "index,cluster" rows (or "id,cluster" when ids are known).
// ---------------------------------------------------------------------------

inline void write_partition_csv(const std::string& path, const Partition& partition,
                                const std::vector<std::string>* ids = nullptr) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << (ids ? "id,cluster" : "index,cluster") << '\n';
    for (std::size_t i = 0; i < partition.labels.size(); ++i) {
        if (ids) {
            out << (*ids)[i] << ',' << partition.labels[i] << '\n';
        } else {
            out << i << ',' << partition.labels[i] << '\n';
        }
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Collection CSV: one file per collection, no header; each row is the series
// label followed by its T values.
// ---------------------------------------------------------------------------

inline void write_collection_csv(const std::string& path, const LabeledCollection& coll) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < coll.series.size(); ++i) {
        std::string line = std::to_string(coll.labels[i]);
        for (const double v : coll.series[i]) {
            line += ',';
            line += detail::format_double(v);
        }
        out << line << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

inline LabeledCollection read_collection_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    LabeledCollection coll;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() < 2) {
            throw DataError("'" + path + "': row at line " + std::to_string(line_no) + " is too short");
        }
        coll.labels.push_back(static_cast<int>(detail::parse_double(fields[0], line_no, 1, "'" + path + "'")));
        TimeSeries series;
        series.reserve(fields.size() - 1);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            series.push_back(detail::parse_double(fields[c], line_no, c + 1, "'" + path + "'"));
        }
        coll.series.push_back(std::move(series));
    }
    if (coll.series.empty()) throw DataError("'" + path + "': empty collection");
    int max_label = 0;
    for (const int l : coll.labels) max_label = std::max(max_label, l);
    coll.k = max_label + 1;
    return coll;
}

}  // namespace ancl
