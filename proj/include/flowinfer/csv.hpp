#pragma once

#include <string>
#include <vector>

#include "flowinfer/tensor.hpp"

namespace flowinfer {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Numeric CSV with a mandatory header row.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
// Mixed-content CSV (cells written verbatim).
void write_csv_text(const std::string& path,
                    const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

// One dataset: rows are observations (or time steps), columns are data
// dimensions; the column count must match the model's data dimension.
Tensor read_dataset_csv(const std::string& path, std::size_t expected_dim);
void write_dataset_csv(const std::string& path, const Tensor& dataset,
                       const std::vector<std::string>& column_names);

std::string format_full(double v);  // shortest round-trippable decimal

}  // namespace flowinfer
