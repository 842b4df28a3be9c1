#pragma once

#include <string>

#include "trimnet/tensor.hpp"

namespace trimnet {

// Shortest decimal form that re-parses to exactly the same double.
std::string format_double(double v);

// |W| of a 2-D weight as a headerless CSV matrix (CRLF rows, values re-parse
// exactly) and as an 8-bit binary PGM, linearly scaled so max |W| maps to 255
// (all-zero matrix -> all-black image). Writes <path_stem>.csv and
// <path_stem>.pgm; throws FormatError on I/O failure.
void export_heatmap(const Tensor& weight, const std::string& path_stem);

void write_matrix_csv(const Tensor& matrix, const std::string& path);
void write_pgm(const Tensor& matrix, const std::string& path);

}  // namespace trimnet
