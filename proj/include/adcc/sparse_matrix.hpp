#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace adcc {

/// Host-side CSR matrix. Workloads copy it into the arena before use.
struct CsrMatrix {
  std::uint64_t n = 0;
  std::vector<std::int64_t> row_ptr;  // n + 1 entries
  std::vector<std::int64_t> col_idx;
  std::vector<double> values;

  std::uint64_t nnz() const { return values.size(); }

  /// Structural checks plus symmetry within `rel_tol` of the largest |a_ij|.
  void validate_symmetric(double rel_tol = 1e-12) const;

  /// y = A x, rows summed in storage order.
  std::vector<double> multiply(std::span<const double> x) const;
};

CsrMatrix identity_matrix(std::uint64_t n);

/// Builds CSR from a dense row-major matrix, dropping exact zeros.
CsrMatrix csr_from_dense(std::uint64_t n, std::span<const double> dense);

/// Symmetric, strictly diagonally dominant matrix with roughly
/// 2 * offdiag_per_row + 1 nonzeros per row. Deterministic in `seed`.
CsrMatrix random_spd(std::uint64_t n, std::uint64_t offdiag_per_row, std::uint64_t seed);

/// Uniform(-1, 1) right-hand side, deterministic in `seed`.
std::vector<double> random_vector(std::uint64_t n, std::uint64_t seed);

}  // namespace adcc
