#include "adex/pipeline/csv.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "adex/errors.hpp"

namespace adex::pipe {

void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.precision(10);
    for (const auto& c : table.comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < table.header.size(); ++i)
        out << table.header[i] << (i + 1 < table.header.size() ? "," : "");
    out << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            throw ShapeError("csv row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "");
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t b = line.find_first_not_of("# ");
            t.comments.push_back(b == std::string::npos ? "" : line.substr(b));
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            t.header = cells;
            have_header = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            char* end = nullptr;
            row.push_back(std::strtod(c.c_str(), &end));
            if (end == c.c_str()) throw IoError("non-numeric cell '" + c + "' in " + path);
        }
        if (row.size() != t.header.size()) throw ShapeError("ragged csv row in " + path);
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw IoError("csv file '" + path + "' has no header");
    return t;
}

}  // namespace adex::pipe
