#include "flowinfer/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowinfer/errors.hpp"

namespace flowinfer {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      while (std::getline(ss, cell, ',')) table.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("'" + path + "' line " + std::to_string(lineno) +
                      ": not a number: '" + cell + "'");
      }
    }
    if (row.size() != table.header.size()) {
      throw IoError("'" + path + "' line " + std::to_string(lineno) +
                    ": expected " + std::to_string(table.header.size()) +
                    " columns, got " + std::to_string(row.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (first) throw IoError("'" + path + "' is empty (missing header row)");
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_full(row[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

void write_csv_text(const std::string& path,
                    const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

Tensor read_dataset_csv(const std::string& path, std::size_t expected_dim) {
  CsvTable table = read_csv(path);
  if (table.header.size() != expected_dim) {
    throw IoError("'" + path + "': expected " + std::to_string(expected_dim) +
                  " data columns, found " + std::to_string(table.header.size()));
  }
  if (table.rows.empty()) throw IoError("'" + path + "': no observations");
  Tensor out({table.rows.size(), expected_dim});
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < expected_dim; ++j) {
      out.at(i, j) = table.rows[i][j];
    }
  }
  return out;
}

void write_dataset_csv(const std::string& path, const Tensor& dataset,
                       const std::vector<std::string>& column_names) {
  if (dataset.rank() != 2 || dataset.extent(1) != column_names.size()) {
    throw DimensionError("write_dataset_csv: shape/header mismatch");
  }
  std::vector<std::vector<double>> rows(dataset.extent(0));
  for (std::size_t i = 0; i < dataset.extent(0); ++i) {
    rows[i].resize(dataset.extent(1));
    for (std::size_t j = 0; j < dataset.extent(1); ++j) {
      rows[i][j] = dataset.at(i, j);
    }
  }
  write_csv(path, column_names, rows);
}

}  // namespace flowinfer
