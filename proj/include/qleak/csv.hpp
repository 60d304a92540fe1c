#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qleak::csv {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Row = std::vector<std::string>;

// RFC 4180 style: comma separated, double-quoted fields may hold commas,
// quotes ("") and line breaks. Blank lines are skipped.
std::vector<Row> read(std::istream& in);
void write_row(std::ostream& out, const Row& fields);

// Shortest representation that parses back to the same double.
std::string format(double value);
// Whole-field parse; throws ParseError on trailing garbage or empty input.
double parse_double(std::string_view text);

}  // namespace qleak::csv
