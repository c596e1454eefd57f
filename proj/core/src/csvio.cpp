#include "seqlab/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "seqlab/errors.hpp"

namespace seqlab::csvio {

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open");
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError(path.string() + ":" + std::to_string(line_no) +
                                ": bad number '" + cell + "'");
            }
        }
        if (row.size() != table.header.size())
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": column count mismatch");
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_g10(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace seqlab::csvio
