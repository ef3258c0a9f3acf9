#pragma once

#include <string>
#include <vector>

#include "ivsir/matrix.hpp"

namespace ivsir::csv {

// Minimal comma-separated table: header row required, UTF-8, '.' decimals,
// no quoting, empty cells rejected.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int cols() const { return static_cast<int>(header.size()); }
    int size() const { return static_cast<int>(rows.size()); }
    // Index of a named column, -1 when absent.
    int find(const std::string& name) const;
};

Table read(const std::string& path);

// All cells parsed as doubles; throws DataError naming the offending cell.
Matrix to_matrix(const Table& table);
// Single-column variant.
Vec to_vector(const Table& table);

void write(const std::string& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);

// Fixed formats so reruns are byte-identical: full precision for
// per-replicate values, three decimals for summaries.
std::string fmt17(double v);
std::string fmt3(double v);

}  // namespace ivsir::csv
