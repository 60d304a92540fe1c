#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "qleak/csv.hpp"
#include "qleak/random.hpp"

using namespace qleak;

TEST_CASE("quoting round trip") {
    const csv::Row row{"plain", "with,comma", "with \"quote\"", "multi\nline", "", " padded "};
    std::ostringstream out;
    csv::write_row(out, row);
    csv::write_row(out, {"x"});
    std::istringstream in(out.str());
    const auto rows = csv::read(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == row);
    CHECK(rows[1] == csv::Row{"x"});
}

TEST_CASE("CRLF and blank lines") {
    std::istringstream in("a,b\r\n\r\n1,2\r\n");
    const auto rows = csv::read(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == csv::Row{"1", "2"});
}

TEST_CASE("unterminated quote is an error") {
    std::istringstream in("\"abc\n");
    CHECK_THROWS_AS(csv::read(in), csv::ParseError);
}

TEST_CASE("doubles round-trip exactly") {
    auto rng = make_rng(12);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 20000; ++i) {
        const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(csv::parse_double(csv::format(x)) == x);
    }
    for (double x : {0.0, -0.0, 2495.773047, 0.168084145, 5e-324, 1.7976931348623157e308})
        CHECK(csv::parse_double(csv::format(x)) == x);
    CHECK(csv::format(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(std::isinf(csv::parse_double("inf")));
    CHECK(std::isnan(csv::parse_double(csv::format(std::nan("")))));
}

TEST_CASE("strict number parsing") {
    CHECK(csv::parse_double(" 1.5 ") == 1.5);
    CHECK_THROWS_AS(csv::parse_double(""), csv::ParseError);
    CHECK_THROWS_AS(csv::parse_double("1.5x"), csv::ParseError);
    CHECK_THROWS_AS(csv::parse_double("abc"), csv::ParseError);
}
