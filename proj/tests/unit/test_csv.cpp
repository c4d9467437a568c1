#include <gtest/gtest.h>

#include <charconv>
#include <random>

#include "hda/csv.hpp"
#include "test_support.hpp"

namespace hda {
namespace {

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(3.0), "3");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    const std::string s = format_real(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v);
  }
}

TEST(CsvWriter, AppendKeepsOneHeader) {
  test::TempDir dir;
  {
    CsvWriter w(dir / "a.csv", {"x", "y"}, CsvWriter::Mode::Append);
    w.row(1, 0.25);
  }
  {
    CsvWriter w(dir / "a.csv", {"x", "y"}, CsvWriter::Mode::Append);
    w.row(2, std::string("z"));
  }
  EXPECT_EQ(test::read_bytes(dir / "a.csv"), "x,y\n1,0.25\n2,z\n");
  EXPECT_THROW(CsvWriter(dir / "a.csv", {"x"}, CsvWriter::Mode::Append), std::runtime_error);
}

TEST(CsvWriter, TruncateRewrites) {
  test::TempDir dir;
  { CsvWriter(dir / "a.csv", {"k"}).row(1); }
  { CsvWriter(dir / "a.csv", {"k"}).row(2); }
  EXPECT_EQ(test::read_bytes(dir / "a.csv"), "k\n2\n");
}

}  // namespace
}  // namespace hda
