#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "depfdr/csv.hpp"
#include "depfdr/errors.hpp"

using namespace depfdr;

TEST(Csv, ParsesHeaderAndColumns) {
  const auto t = CsvTable::parse("a,b\n1,0.5\n2,1e-05\r\n\n3,-inf\n");
  EXPECT_EQ(t.header(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.rows(), 3U);
  EXPECT_EQ(t.numeric_column("a"), (std::vector<double>{1, 2, 3}));
  const auto b = t.numeric_column("b");
  EXPECT_EQ(b[1], 1e-05);
  EXPECT_TRUE(std::isinf(b[2]) && b[2] < 0);
  EXPECT_TRUE(t.has_column("b"));
  EXPECT_FALSE(t.has_column("c"));
  EXPECT_THROW(t.numeric_column("c"), DomainError);
}

TEST(Csv, Errors) {
  EXPECT_THROW(CsvTable::parse(""), DomainError);
  EXPECT_THROW(CsvTable::parse("a,b\n1\n"), DomainError);
  EXPECT_THROW(CsvTable::parse("a\n1,5\n"), DomainError);
  EXPECT_THROW(parse_double("0,5"), DomainError);
  EXPECT_THROW(parse_double("abc"), DomainError);
  EXPECT_THROW(parse_double(""), DomainError);
  EXPECT_EQ(parse_double(" 0.25 "), 0.25);
}

TEST(Csv, DecimalPointRoundTrip) {
  for (const double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e10}) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    EXPECT_EQ(parse_double(buf), v);
  }
}
