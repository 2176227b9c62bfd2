#pragma once

#include <string>
#include <vector>

namespace hvacreg::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by header name; throws std::runtime_error if absent.
    std::size_t column(const std::string& name) const;
};

// RFC-4180 reader: quoted fields, embedded commas/quotes/newlines, CRLF
// tolerant. First record is the header.
Table read_file(const std::string& path);
Table parse(const std::string& text);

// Writer quotes a field only when it contains a comma, quote or newline.
std::string format_field(const std::string& field);
void write_file(const std::string& path, const Table& table);

// Canonical double formatting for CSV/JSON exports: shortest round-trip
// representation so that re-export is byte-identical.
std::string format_double(double v);

} // namespace hvacreg::csv
