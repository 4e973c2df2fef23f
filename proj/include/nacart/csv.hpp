#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nacart/core.hpp"

namespace nacart {

/// Header row plus numeric body. Missing cells are read from `NA` or an empty
/// field and always written back as `NA`.
struct CsvTable {
  std::vector<std::string> names;
  IncompleteMatrix data;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

/// Default header `X1..Xd`.
std::vector<std::string> default_names(std::size_t d, const std::string& prefix = "X");

/// Single-column file (header `y`). Reading rejects NA: targets are always observed.
std::vector<double> read_target(const std::string& path);
void write_target(const std::string& path, const std::vector<double>& y,
                  const std::string& name = "y");

/// `data.csv` -> `data.y.csv`.
std::string target_path_for(const std::string& features_path);

/// 17 significant digits (%.17g).
std::string format_double(double v);

/// Shortest text that reads back to the same double.
std::string format_shortest(double v);

/// Whole-string decimal parse; nullopt on any trailing garbage.
std::optional<double> parse_number(std::string_view s);

}  // namespace nacart
