#include "srvfnet/csv_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "srvfnet/errors.hpp"

namespace srvfnet {

namespace {

std::vector<double> parse_row(const std::string& line, int row) {
  std::vector<double> out;
  const char* cursor = line.c_str();
  while (*cursor != '\0') {
    char* end = nullptr;
    const double value = std::strtod(cursor, &end);
    if (end == cursor) {
      throw ParseError("read_csv: row " + std::to_string(row) +
                       ": non-numeric token");
    }
    out.push_back(value);
    cursor = end;
    while (*cursor == ' ' || *cursor == '\t') ++cursor;
    if (*cursor == ',') {
      ++cursor;
      while (*cursor == ' ' || *cursor == '\t') ++cursor;
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd read_csv(const std::string& path, bool has_header,
                         std::vector<std::string>* header_out) {
  std::ifstream in(path);
  if (!in) throw ParseError("read_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int row = 0;
  bool skipped_header = !has_header;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      if (header_out) {
        header_out->clear();
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header_out->push_back(cell);
      }
      continue;
    }
    rows.push_back(parse_row(line, row));
    if (rows.size() > 1 && rows.back().size() != rows.front().size()) {
      throw DimensionError("read_csv: row " + std::to_string(row) + " has " +
                           std::to_string(rows.back().size()) +
                           " values, expected " +
                           std::to_string(rows.front().size()));
    }
  }
  if (rows.empty()) throw ParseError("read_csv: no data rows in " + path);

  Eigen::MatrixXd m(static_cast<int>(rows.size()),
                    static_cast<int>(rows.front().size()));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void write_csv(const std::string& path, const Eigen::MatrixXd& rows,
               const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw ParseError("write_csv: cannot open " + path);
  if (!header.empty()) {
    if (static_cast<int>(header.size()) != rows.cols()) {
      throw DimensionError("write_csv: header width mismatch");
    }
    for (size_t i = 0; i < header.size(); ++i) {
      out << (i ? "," : "") << header[i];
    }
    out << '\n';
  }
  char buf[32];
  for (int r = 0; r < rows.rows(); ++r) {
    for (int c = 0; c < rows.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", rows(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw ParseError("write_csv: write failed for " + path);
}

}  // namespace srvfnet
