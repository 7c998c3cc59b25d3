#pragma once

#include "curbflow/data_model.hpp"

#include <cstddef>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace curbflow::csv {

struct Row {
    std::size_t line = 0; // 1-based line number in the source
    std::vector<std::string> fields;
};

// Splits on commas and trims surrounding whitespace. Quoted fields are not
// supported; none of the feeds here carry embedded commas.
std::vector<std::string> split(std::string_view line);

// Reads a headed CSV stream. The header must match `expected` exactly (after
// trimming); otherwise InputError names line 1. Each data row must have the
// header's arity. Blank lines are skipped.
void read(std::istream& in, const std::vector<std::string>& expected, std::string_view source,
          const std::function<void(const Row&)>& on_row);

void read_file(const std::string& path, const std::vector<std::string>& expected,
               const std::function<void(const Row&)>& on_row);

double parse_double(const Row& row, std::size_t col, std::string_view source);
long long parse_int(const Row& row, std::size_t col, std::string_view source);

// ISO-8601 "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace the T). Times are
// taken as wall-clock values; no zone conversion is applied.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

// Shortest round-trip decimal representation.
std::string format_double(double value);

} // namespace curbflow::csv
