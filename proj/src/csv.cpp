#include "curbflow/csv.hpp"

#include "curbflow/errors.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>

namespace curbflow::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << source << ":" << line << ": " << what;
    throw InputError(os.str());
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ',';
        out += parts[i];
    }
    return out;
}

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len, bool& ok) {
    int value = 0;
    if (pos + len > s.size()) {
        ok = false;
        return 0;
    }
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, value);
    if (ec != std::errc() || ptr != s.data() + pos + len) ok = false;
    return value;
}

} // namespace

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t begin = 0;
    for (;;) {
        const std::size_t comma = line.find(',', begin);
        out.emplace_back(trim(line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin)));
        if (comma == std::string_view::npos) break;
        begin = comma + 1;
    }
    return out;
}

void read(std::istream& in, const std::vector<std::string>& expected, std::string_view source,
          const std::function<void(const Row&)>& on_row) {
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (!header_seen) {
            if (fields != expected) {
                fail(source, lineno, "bad header '" + join(fields) + "', expected '" + join(expected) + "'");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != expected.size()) {
            fail(source, lineno, "expected " + std::to_string(expected.size()) + " fields, found " +
                                     std::to_string(fields.size()));
        }
        on_row(Row{lineno, std::move(fields)});
    }
    if (!header_seen) fail(source, 1, "missing header '" + join(expected) + "'");
}

void read_file(const std::string& path, const std::vector<std::string>& expected,
               const std::function<void(const Row&)>& on_row) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    read(in, expected, path, on_row);
}

double parse_double(const Row& row, std::size_t col, std::string_view source) {
    const std::string& f = row.fields.at(col);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(value)) {
        fail(source, row.line, "field " + std::to_string(col + 1) + " '" + f + "' is not a number");
    }
    return value;
}

long long parse_int(const Row& row, std::size_t col, std::string_view source) {
    const std::string& f = row.fields.at(col);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail(source, row.line, "field " + std::to_string(col + 1) + " '" + f + "' is not an integer");
    }
    return value;
}

Timestamp parse_timestamp(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
    bool ok = text.size() == 16 || text.size() == 19;
    if (ok) {
        ok = text[4] == '-' && text[7] == '-' && (text[10] == 'T' || text[10] == ' ') && text[13] == ':' &&
             (text.size() == 16 || text[16] == ':');
    }
    const int y = parse_fixed(text, 0, 4, ok);
    const int mo = parse_fixed(text, 5, 2, ok);
    const int d = parse_fixed(text, 8, 2, ok);
    const int h = parse_fixed(text, 11, 2, ok);
    const int mi = parse_fixed(text, 14, 2, ok);
    const int s = text.size() == 19 ? parse_fixed(text, 17, 2, ok) : 0;
    const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(mo)),
                                          std::chrono::day(static_cast<unsigned>(d))};
    if (!ok || !ymd.ok() || h > 23 || mi > 59 || s > 60) {
        throw InputError("bad ISO-8601 timestamp '" + std::string(text) + "'");
    }
    return std::chrono::sys_days(ymd) + std::chrono::hours(h) + std::chrono::minutes(mi) + std::chrono::seconds(s);
}

std::string format_timestamp(Timestamp ts) {
    const auto day = std::chrono::floor<std::chrono::days>(ts);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::hh_mm_ss hms{ts - day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

} // namespace curbflow::csv
