#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace seqlab::csvio {

/// Header plus numeric rows; every cell parsed as double (nan allowed).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Column index by name, -1 if absent.
    int column(const std::string& name) const;
};

Table read_table(const std::filesystem::path& path);

/// Shortest round-trippable-ish formatting used for all CSV output.
std::string format_g10(double v);

}  // namespace seqlab::csvio
