#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace bessplan {

// Bad or inconsistent input data (files, ids, parameters).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace csv {

// Comma-separated table with a header row. Fields are trimmed; quoting is not
// supported since none of our schemas carry free text with commas.
struct Table {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;

    int column(const std::string& name) const;
    int require_column(const std::string& name) const;

    const std::string& text(std::size_t row, int col) const;
    double number(std::size_t row, int col) const;
    long integer(std::size_t row, int col) const;

    [[noreturn]] void fail(std::size_t row, const std::string& what) const;
};

Table read(std::istream& in, const std::string& source);
Table read_file(const std::filesystem::path& path);

}  // namespace csv
}  // namespace bessplan
