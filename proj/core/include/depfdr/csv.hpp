#pragma once
// Minimal reader for the comma-separated files this library writes: a header
// row, no quoting, '.' as the decimal separator.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace depfdr {

class CsvTable {
 public:
  static CsvTable parse(std::string_view text);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return cells_.size(); }
  bool has_column(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;

  const std::string& cell(std::size_t row, std::size_t col) const { return cells_.at(row).at(col); }
  std::vector<double> numeric_column(std::string_view name) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

// Locale-independent; throws DomainError unless the whole field is a number.
double parse_double(std::string_view field);

}  // namespace depfdr
