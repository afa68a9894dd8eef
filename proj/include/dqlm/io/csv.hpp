#ifndef DQLM_IO_CSV_HPP
#define DQLM_IO_CSV_HPP

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dqlm/common.hpp"
#include "dqlm/model.hpp"

namespace dqlm {

struct ColumnMapping {
  std::string time_column = "t";
  std::string y_column = "y";
  std::vector<std::string> covariate_columns;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

/// Sortable key for the time cell: plain integer index, or an ISO date
/// YYYY-MM-DD mapped to the integer YYYYMMDD. Returns false if neither.
inline bool parse_time_key(const std::string& s, long long& key) {
  if (s.empty()) return false;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() + s.size()) {
    key = v;
    return true;
  }
  int y, m, d;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d", &y, &m, &d) == 3 &&
      s.size() == 10 && s[4] == '-' && s[7] == '-' && m >= 1 && m <= 12 &&
      d >= 1 && d <= 31) {
    key = static_cast<long long>(y) * 10000 + m * 100 + d;
    return true;
  }
  return false;
}

}  // namespace detail

/// Read a delimited file with one header row into a validated series.
/// Failures carry 1-based line numbers.
inline TimeSeriesData ingest_csv(const std::string& path,
                                 const ColumnMapping& mapping = {}) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open input file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DomainError(path + ": empty file");
  const auto header = detail::split_csv_line(line);
  const auto column_index = [&](const std::string& name) {
    for (size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<int>(j);
    }
    throw DomainError(path + ": missing column '" + name + "'");
  };
  const int time_idx = column_index(mapping.time_column);
  const int y_idx = column_index(mapping.y_column);
  std::vector<int> cov_idx;
  for (const auto& name : mapping.covariate_columns) {
    cov_idx.push_back(column_index(name));
  }

  TimeSeriesData data;
  data.covariate_names = mapping.covariate_columns;
  std::vector<std::vector<double>> cov_rows;
  long long prev_key = 0;
  bool have_prev = false;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const auto cell_at = [&](int idx) -> const std::string& {
      static const std::string empty;
      return idx < static_cast<int>(cells.size()) ? cells[idx] : empty;
    };

    long long key;
    if (!detail::parse_time_key(cell_at(time_idx), key)) {
      throw DomainError(path + ": line " + std::to_string(line_no) +
                        ": unparseable time value '" + cell_at(time_idx) +
                        "'");
    }
    if (have_prev && key == prev_key) {
      throw DomainError(path + ": line " + std::to_string(line_no) +
                        ": duplicate timestamp");
    }
    if (have_prev && key < prev_key) {
      throw DomainError(path + ": line " + std::to_string(line_no) +
                        ": timestamps must be strictly increasing");
    }
    prev_key = key;
    have_prev = true;

    double y;
    if (cell_at(y_idx).empty()) {
      throw DomainError(path + ": line " + std::to_string(line_no) +
                        ": missing y value");
    }
    if (!detail::parse_double(cell_at(y_idx), y) || !std::isfinite(y)) {
      throw DomainError(path + ": line " + std::to_string(line_no) +
                        ": non-numeric y value '" + cell_at(y_idx) + "'");
    }

    std::vector<double> cov_row;
    for (int idx : cov_idx) {
      double v;
      if (!detail::parse_double(cell_at(idx), v) || !std::isfinite(v)) {
        throw DomainError(path + ": line " + std::to_string(line_no) +
                          ": non-numeric covariate '" + cell_at(idx) + "'");
      }
      cov_row.push_back(v);
    }

    data.time_labels.push_back(cell_at(time_idx));
    data.y.push_back(y);
    cov_rows.push_back(std::move(cov_row));
  }
  if (data.y.empty()) throw DomainError(path + ": no data rows");

  if (!cov_idx.empty()) {
    data.covariates.resize(static_cast<Eigen::Index>(cov_rows.size()),
                           static_cast<Eigen::Index>(cov_idx.size()));
    for (size_t i = 0; i < cov_rows.size(); ++i) {
      for (size_t j = 0; j < cov_idx.size(); ++j) {
        data.covariates(static_cast<Eigen::Index>(i),
                        static_cast<Eigen::Index>(j)) = cov_rows[i][j];
      }
    }
  }
  data.validate();
  return data;
}

/// %.17g formatting: doubles survive a write/read round trip bit-exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open output file: " + path);
  const auto write_row = [&](const std::vector<std::string>& row) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  if (!out) throw DomainError("failed writing " + path);
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open file: " + path);
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) table.header = detail::split_csv_line(line);
  while (std::getline(in, line)) {
    if (!detail::trim(line).empty()) {
      table.rows.push_back(detail::split_csv_line(line));
    }
  }
  return table;
}

}  // namespace dqlm

#endif  // DQLM_IO_CSV_HPP
