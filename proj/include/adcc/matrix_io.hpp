#pragma once

#include <cstdint>
#include <string>

#include "adcc/dense_matrix.hpp"
#include "adcc/sparse_matrix.hpp"

namespace adcc {

/// Matrix Market "coordinate real {general|symmetric}". Symmetric files are
/// expanded to both triangles. Rows come out sorted by column.
CsrMatrix read_matrix_market(const std::string& path);
void write_matrix_market(const std::string& path, const CsrMatrix& m);

/// Dense binary: 8-byte magic "ADCCDNS1", uint64 n, then n*n row-major f64,
/// all little-endian.
inline constexpr char kDenseMagic[9] = "ADCCDNS1";
DenseMatrix read_dense_binary(const std::string& path);
void write_dense_binary(const std::string& path, const DenseMatrix& m);

/// Comma-separated rows; every row must have the same width.
DenseMatrix read_csv(const std::string& path);
void write_csv(const std::string& path, const DenseMatrix& m);

}  // namespace adcc
