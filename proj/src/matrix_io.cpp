#include "adcc/matrix_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

#include "adcc/error.hpp"

namespace adcc {

namespace {

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last)
    throw Error(ErrorCode::kParseError, where + ": bad number '" + std::string(tok) + "'");
  return v;
}

}  // namespace

CsrMatrix read_matrix_market(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, path + ": empty file");
  std::istringstream header(lower(line));
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%matrixmarket" || object != "matrix" || format != "coordinate")
    throw Error(ErrorCode::kParseError, path + ": expected a coordinate Matrix Market header");
  if (field != "real" && field != "integer" && field != "double")
    throw Error(ErrorCode::kParseError, path + ": unsupported field '" + field + "'");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw Error(ErrorCode::kParseError, path + ": unsupported symmetry '" + symmetry + "'");

  while (std::getline(in, line) && (line.empty() || line[0] == '%')) {}
  std::istringstream size_line(line);
  std::int64_t rows = 0, cols = 0, entries = 0;
  if (!(size_line >> rows >> cols >> entries) || rows <= 0 || rows != cols || entries < 0)
    throw Error(ErrorCode::kParseError, path + ": bad size line (square matrix required)");

  const auto n = static_cast<std::uint64_t>(rows);
  std::vector<std::map<std::int64_t, double>> row_maps(n);
  for (std::int64_t e = 0; e < entries; ++e) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, path + ": truncated entries");
    if (line.empty() || line[0] == '%') {
      --e;
      continue;
    }
    std::istringstream ls(line);
    std::int64_t i = 0, j = 0;
    double v = 0.0;
    if (!(ls >> i >> j >> v) || i < 1 || j < 1 || i > rows || j > cols)
      throw Error(ErrorCode::kParseError, path + ": bad entry '" + line + "'");
    row_maps[static_cast<std::size_t>(i - 1)][j - 1] += v;
    if (symmetric && i != j) row_maps[static_cast<std::size_t>(j - 1)][i - 1] += v;
  }
  CsrMatrix m;
  m.n = n;
  m.row_ptr.push_back(0);
  for (const auto& r : row_maps) {
    for (const auto& [j, v] : r) {
      m.col_idx.push_back(j);
      m.values.push_back(v);
    }
    m.row_ptr.push_back(static_cast<std::int64_t>(m.values.size()));
  }
  return m;
}

void write_matrix_market(const std::string& path, const CsrMatrix& m) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.n << ' ' << m.n << ' ' << m.nnz() << '\n';
  out << std::setprecision(17);
  for (std::uint64_t i = 0; i < m.n; ++i)
    for (auto k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
      out << i + 1 << ' ' << m.col_idx[static_cast<std::size_t>(k)] + 1 << ' '
          << m.values[static_cast<std::size_t>(k)] << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

DenseMatrix read_dense_binary(const std::string& path) {
  auto in = open_in(path, true);
  char magic[8];
  std::uint64_t n = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, kDenseMagic, 8) != 0)
    throw Error(ErrorCode::kParseError, path + ": bad magic");
  if (!in.read(reinterpret_cast<char*>(&n), 8) || n == 0 || n > (1u << 16))
    throw Error(ErrorCode::kParseError, path + ": bad dimension");
  DenseMatrix m(n, n);
  if (!in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(n * n * 8)))
    throw Error(ErrorCode::kParseError, path + ": truncated payload");
  return m;
}

void write_dense_binary(const std::string& path, const DenseMatrix& m) {
  if (m.rows != m.cols) throw Error(ErrorCode::kShapeMismatch, "dense binary needs a square matrix");
  auto out = open_out(path, true);
  out.write(kDenseMagic, 8);
  out.write(reinterpret_cast<const char*>(&m.rows), 8);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * 8));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

DenseMatrix read_csv(const std::string& path) {
  auto in = open_in(path);
  DenseMatrix m;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::uint64_t width = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string_view tok =
          std::string_view(line).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      m.data.push_back(parse_double(tok, path + ":" + std::to_string(lineno)));
      ++width;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (m.rows == 0) m.cols = width;
    else if (width != m.cols)
      throw Error(ErrorCode::kParseError, path + ":" + std::to_string(lineno) + ": ragged row");
    ++m.rows;
  }
  return m;
}

void write_csv(const std::string& path, const DenseMatrix& m) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (std::uint64_t i = 0; i < m.rows; ++i) {
    for (std::uint64_t j = 0; j < m.cols; ++j) out << (j ? "," : "") << m.at(i, j);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

}  // namespace adcc
