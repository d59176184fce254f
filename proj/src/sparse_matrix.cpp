#include "adcc/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "adcc/error.hpp"
#include "adcc/philox.hpp"

namespace adcc {

namespace {

constexpr std::uint64_t kPatternStream = 0x5350'4400;  // "SPD"
constexpr std::uint64_t kVectorStream = 0x5248'5300;   // "RHS"

}  // namespace

void CsrMatrix::validate_symmetric(double rel_tol) const {
  if (n == 0) throw Error(ErrorCode::kShapeMismatch, "matrix dimension must be >= 1");
  if (row_ptr.size() != n + 1 || row_ptr.front() != 0 ||
      static_cast<std::uint64_t>(row_ptr.back()) != values.size() ||
      col_idx.size() != values.size())
    throw Error(ErrorCode::kShapeMismatch, "malformed CSR arrays");
  std::map<std::pair<std::int64_t, std::int64_t>, double> entries;
  double scale = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (row_ptr[i] > row_ptr[i + 1]) throw Error(ErrorCode::kShapeMismatch, "row_ptr not monotone");
    for (auto k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const auto j = col_idx[static_cast<std::size_t>(k)];
      if (j < 0 || static_cast<std::uint64_t>(j) >= n)
        throw Error(ErrorCode::kShapeMismatch, "column index out of range");
      const double v = values[static_cast<std::size_t>(k)];
      entries[{static_cast<std::int64_t>(i), j}] += v;
      scale = std::max(scale, std::abs(v));
    }
  }
  for (const auto& [ij, v] : entries) {
    auto it = entries.find({ij.second, ij.first});
    const double vt = it == entries.end() ? 0.0 : it->second;
    if (std::abs(v - vt) > rel_tol * scale)
      throw Error(ErrorCode::kInvalidArgument,
                  "matrix is not symmetric at (" + std::to_string(ij.first) + ", " +
                      std::to_string(ij.second) + ")");
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n, 0.0);
  for (std::uint64_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (auto k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      sum += values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col_idx[static_cast<std::size_t>(k)])];
    y[i] = sum;
  }
  return y;
}

CsrMatrix identity_matrix(std::uint64_t n) {
  CsrMatrix m;
  m.n = n;
  m.row_ptr.resize(n + 1);
  for (std::uint64_t i = 0; i <= n; ++i) m.row_ptr[i] = static_cast<std::int64_t>(i);
  m.col_idx.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) m.col_idx[i] = static_cast<std::int64_t>(i);
  m.values.assign(n, 1.0);
  return m;
}

CsrMatrix csr_from_dense(std::uint64_t n, std::span<const double> dense) {
  if (dense.size() != n * n) throw Error(ErrorCode::kShapeMismatch, "dense matrix is not n x n");
  CsrMatrix m;
  m.n = n;
  m.row_ptr.push_back(0);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < n; ++j) {
      if (dense[i * n + j] != 0.0) {
        m.col_idx.push_back(static_cast<std::int64_t>(j));
        m.values.push_back(dense[i * n + j]);
      }
    }
    m.row_ptr.push_back(static_cast<std::int64_t>(m.values.size()));
  }
  return m;
}

CsrMatrix random_spd(std::uint64_t n, std::uint64_t offdiag_per_row, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
  const CounterRng rng(seed);
  std::vector<std::map<std::uint64_t, double>> rows(n);
  for (std::uint64_t i = 0; i < n && n > 1; ++i) {
    for (std::uint64_t t = 0; t < offdiag_per_row; ++t) {
      const auto bits = rng.draw(i * offdiag_per_row + t, kPatternStream);
      const std::uint64_t j = bits[0] % n;
      if (j == i) continue;
      const double v = -(0.1 + 0.9 * CounterRng::unit_open(bits[1]));
      rows[i][j] += v;
      rows[j][i] += v;
    }
  }
  CsrMatrix m;
  m.n = n;
  m.row_ptr.push_back(0);
  for (std::uint64_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (const auto& [j, v] : rows[i]) off += std::abs(v);
    rows[i][i] = 1.1 * off + 1.0;
    for (const auto& [j, v] : rows[i]) {
      m.col_idx.push_back(static_cast<std::int64_t>(j));
      m.values.push_back(v);
    }
    m.row_ptr.push_back(static_cast<std::int64_t>(m.values.size()));
  }
  return m;
}

std::vector<double> random_vector(std::uint64_t n, std::uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<double> v(n);
  for (std::uint64_t i = 0; i < n; ++i)
    v[i] = 2.0 * CounterRng::unit_open(rng.draw(i, kVectorStream)[0]) - 1.0;
  return v;
}

}  // namespace adcc
