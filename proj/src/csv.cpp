#include "ivsir/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ivsir/errors.hpp"

namespace ivsir::csv {

namespace {

std::vector<std::string> split_line(std::string line, const std::string& path,
                                    int lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = line.find(',', start);
        std::string cell = pos == std::string::npos
                               ? line.substr(start)
                               : line.substr(start, pos - start);
        if (cell.empty())
            throw DataError("SchemaMismatch",
                            path + ":" + std::to_string(lineno) +
                                ": empty cell (missing values are rejected)");
        out.push_back(std::move(cell));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

int Table::find(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("IoError", "cannot open " + path);
    Table table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        std::vector<std::string> cells = split_line(line, path, lineno);
        if (table.header.empty()) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size())
                throw DataError("SchemaMismatch",
                                path + ":" + std::to_string(lineno) + ": has " +
                                    std::to_string(cells.size()) +
                                    " cells, header has " +
                                    std::to_string(table.header.size()));
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty())
        throw DataError("SchemaMismatch", path + ": missing header row");
    return table;
}

namespace {

double parse_cell(const std::string& cell, const Table& table, int i, int j) {
    const char* s = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw DataError("SchemaMismatch",
                        "cell '" + cell + "' in column " + table.header[j] +
                            ", row " + std::to_string(i + 1) +
                            " is not numeric");
    return v;
}

}  // namespace

Matrix to_matrix(const Table& table) {
    Matrix out(table.size(), table.cols());
    for (int i = 0; i < table.size(); ++i)
        for (int j = 0; j < table.cols(); ++j)
            out(i, j) = parse_cell(table.rows[i][j], table, i, j);
    return out;
}

Vec to_vector(const Table& table) {
    if (table.cols() != 1)
        throw DataError("SchemaMismatch",
                        "expected a single column, found " +
                            std::to_string(table.cols()));
    Vec out(table.size());
    for (int i = 0; i < table.size(); ++i)
        out[i] = parse_cell(table.rows[i][0], table, i, 0);
    return out;
}

void write(const std::string& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("IoError", "cannot write " + path);
    for (std::size_t j = 0; j < header.size(); ++j)
        out << (j ? "," : "") << header[j];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out << (j ? "," : "") << row[j];
        out << "\n";
    }
    if (!out) throw DataError("IoError", "short write to " + path);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace ivsir::csv
