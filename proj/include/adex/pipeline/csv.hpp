#pragma once

#include <string>
#include <vector>

namespace adex::pipe {

// Comma-separated, UTF-8, one header row; '#' lines are comments.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace adex::pipe
