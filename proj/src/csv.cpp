#include "bessplan/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bessplan::csv {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(trim(field));
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

}  // namespace

int Table::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<int>(i);
    return -1;
}

int Table::require_column(const std::string& name) const
{
    const int c = column(name);
    if (c < 0)
        throw InputError(source + ": missing column '" + name + "'");
    return c;
}

void Table::fail(std::size_t row, const std::string& what) const
{
    throw InputError(source + ":" + std::to_string(line_numbers.at(row)) + ": " + what);
}

const std::string& Table::text(std::size_t row, int col) const
{
    const auto& r = rows.at(row);
    if (col < 0 || col >= static_cast<int>(r.size()))
        fail(row, "missing field '" + header.at(col) + "'");
    return r[col];
}

double Table::number(std::size_t row, int col) const
{
    const std::string& s = text(row, col);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        fail(row, "field '" + header.at(col) + "' is not a number: '" + s + "'");
    }
    if (used != s.size() || std::isnan(v))
        fail(row, "field '" + header.at(col) + "' is not a number: '" + s + "'");
    return v;
}

long Table::integer(std::size_t row, int col) const
{
    const std::string& s = text(row, col);
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        fail(row, "field '" + header.at(col) + "' is not an integer: '" + s + "'");
    }
    if (used != s.size())
        fail(row, "field '" + header.at(col) + "' is not an integer: '" + s + "'");
    return v;
}

Table read(std::istream& in, const std::string& source)
{
    Table t;
    t.source = source;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#')
            continue;
        if (t.header.empty()) {
            t.header = split(body);
            continue;
        }
        auto fields = split(body);
        if (fields.size() != t.header.size())
            throw InputError(source + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    if (t.header.empty())
        throw InputError(source + ": empty file");
    return t;
}

Table read_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path.string());
    return read(in, path.string());
}

}  // namespace bessplan::csv
