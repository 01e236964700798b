#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "lowrank/errors.hpp"

namespace lowrank {

// Reads a numeric matrix from comma-separated text: one row per line, an
// optional single '#'-prefixed header as the first line, blank lines
// ignored. Throws CsvError (with line/column) on anything malformed.
Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd read_matrix_csv_file(const std::string& path);

}  // namespace lowrank
