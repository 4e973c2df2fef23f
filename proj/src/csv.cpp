#include "nacart/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nacart {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& v) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_shortest(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : format_double(v);
}

std::optional<double> parse_number(std::string_view s) {
  double v;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> default_names(std::size_t d, const std::string& prefix) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back(prefix + std::to_string(j + 1));
  return names;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: missing header row");
  for (auto& f : split_fields(line)) t.names.push_back(trim(f));
  const std::size_t d = t.names.size();

  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != d) {
      throw DataError("csv: row " + std::to_string(rows + 1) + " has " +
                      std::to_string(fields.size()) + " fields, header has " + std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::string f = trim(fields[j]);
      if (f.empty() || f == "NA") {
        values.push_back(0.0);
        mask.push_back(1);
        continue;
      }
      double v;
      if (!parse_double(f, v)) {
        throw DataError("csv: cannot parse '" + f + "' at row " + std::to_string(rows + 1) +
                        ", column " + std::to_string(j + 1));
      }
      values.push_back(v);
      mask.push_back(0);
    }
    ++rows;
  }
  t.data = make_incomplete(std::move(values), std::move(mask), rows, d);
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return read_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  const auto& m = table.data;
  if (table.names.size() != m.cols()) throw DataError("csv: header width differs from data");
  for (std::size_t j = 0; j < table.names.size(); ++j) out << (j ? "," : "") << table.names[j];
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      if (m.missing(i, j)) {
        out << "NA";
      } else {
        out << format_double(m.value(i, j));
      }
    }
    out << '\n';
  }
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_csv(out, table);
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<double> read_target(const std::string& path) {
  auto t = read_csv(path);
  if (t.data.cols() != 1) throw DataError("target file '" + path + "' must have one column");
  if (t.data.missing_count() != 0) throw DataError("target file '" + path + "' contains NA");
  return t.data.column(0);
}

void write_target(const std::string& path, const std::vector<double>& y, const std::string& name) {
  IncompleteMatrix m(y.size(), 1);
  for (std::size_t i = 0; i < y.size(); ++i) m.set(i, 0, y[i]);
  write_csv(path, CsvTable{{name}, std::move(m)});
}

std::string target_path_for(const std::string& features_path) {
  const std::string ext = ".csv";
  if (features_path.size() >= ext.size() &&
      features_path.compare(features_path.size() - ext.size(), ext.size(), ext) == 0) {
    return features_path.substr(0, features_path.size() - ext.size()) + ".y.csv";
  }
  return features_path + ".y.csv";
}

}  // namespace nacart
