#pragma once

#include "curbflow/csv.hpp"
#include "curbflow/data_model.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

inline curbflow::TimeGrid grid_at(const char* start, std::size_t count, std::int64_t len = 300) {
    curbflow::TimeGrid g;
    g.start = curbflow::csv::parse_timestamp(start);
    g.count = count;
    g.interval_len = len;
    return g;
}

// Fresh scratch directory under the build tree, emptied on creation.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::path(CURBFLOW_TEST_TMP) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(curbflow::csv::split(line));
    }
    return rows;
}

} // namespace testing
