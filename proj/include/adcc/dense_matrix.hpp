#pragma once

#include <cstdint>
#include <vector>

namespace adcc {

/// Row-major host matrix.
struct DenseMatrix {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::uint64_t r, std::uint64_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::uint64_t i, std::uint64_t j) { return data[i * cols + j]; }
  double at(std::uint64_t i, std::uint64_t j) const { return data[i * cols + j]; }

  static DenseMatrix identity(std::uint64_t n) {
    DenseMatrix m(n, n);
    for (std::uint64_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  bool operator==(const DenseMatrix&) const = default;
};

}  // namespace adcc
