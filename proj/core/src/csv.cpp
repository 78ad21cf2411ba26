#include "depfdr/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "depfdr/errors.hpp"

namespace depfdr {

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

CsvTable CsvTable::parse(std::string_view text) {
  CsvTable table;
  bool first = true;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (first) {
      table.header_ = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != table.header_.size()) {
      throw DomainError(fmt::format("csv line {} has {} fields, header has {}", line_no,
                                    fields.size(), table.header_.size()));
    }
    table.cells_.push_back(std::move(fields));
  }
  if (first) throw DomainError("csv input is empty");
  return table;
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header_.begin(), header_.end(), name) != header_.end();
}

std::size_t CsvTable::column_index(std::string_view name) const {
  const auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end()) throw DomainError(fmt::format("csv has no column '{}'", name));
  return static_cast<std::size_t>(it - header_.begin());
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
  const auto col = column_index(name);
  std::vector<double> out;
  out.reserve(cells_.size());
  for (const auto& row : cells_) out.push_back(parse_double(row[col]));
  return out;
}

double parse_double(std::string_view field) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  if (field == "inf") return std::numeric_limits<double>::infinity();
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw DomainError(fmt::format("not a number: '{}'", field));
  return value;
}

}  // namespace depfdr
