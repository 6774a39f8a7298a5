#pragma once

// Matrix Market I/O: coordinate files for observation sets (1-based indices
// on disk, values with 17 significant digits so doubles round-trip exactly)
// and array files for dense factors.

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "liftmc/core.hpp"
#include "liftmc/observation.hpp"

namespace liftmc {

namespace detail {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

inline void write_matrix_market(const ObservationSet& obs,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << obs.n1() << " " << obs.n2() << " " << obs.m() << "\n";
  for (Index e = 0; e < obs.m(); ++e) {
    out << (obs.rows()[e] + 1) << " " << (obs.cols()[e] + 1) << " "
        << detail::format_g17(obs.vals()[e]) << "\n";
  }
  if (!out) throw IoError("write_matrix_market: write failed for " + path);
}

inline ObservationSet read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_matrix_market: cannot open " + path);
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line)) {
    throw ParseError("read_matrix_market: empty file", 1);
  }
  ++lineno;
  const std::string header = detail::lower(line);
  if (header.rfind("%%matrixmarket", 0) != 0 ||
      header.find("matrix") == std::string::npos ||
      header.find("coordinate") == std::string::npos ||
      header.find("real") == std::string::npos ||
      header.find("general") == std::string::npos) {
    throw ParseError("read_matrix_market: malformed header", lineno);
  }

  Index n1 = 0, n2 = 0;
  long m = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    if (!(ss >> n1 >> n2 >> m)) {
      throw ParseError("read_matrix_market: malformed size line", lineno);
    }
    break;
  }
  if (m < 0) throw ParseError("read_matrix_market: missing size line", lineno);
  if (n1 < 1 || n2 < 1) {
    throw ParseError("read_matrix_market: non-positive dimensions", lineno);
  }
  if (m == 0) {
    throw std::invalid_argument(
        "read_matrix_market: empty coordinate section (at least one "
        "observation required)");
  }

  std::vector<Index> rows, cols;
  std::vector<double> vals;
  rows.reserve(m);
  cols.reserve(m);
  vals.reserve(m);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(m) * 2);
  long count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (count == m) {
      throw ParseError("read_matrix_market: more entries than declared",
                       lineno);
    }
    std::istringstream ss(line);
    long i = 0, j = 0;
    std::string vtok;
    if (!(ss >> i >> j >> vtok)) {
      throw ParseError("read_matrix_market: malformed coordinate line", lineno);
    }
    char* end = nullptr;
    const double v = std::strtod(vtok.c_str(), &end);
    if (end == vtok.c_str() || *end != '\0') {
      throw ParseError("read_matrix_market: malformed value", lineno);
    }
    if (i < 1 || i > n1 || j < 1 || j > n2) {
      throw ParseError("read_matrix_market: index out of range", lineno);
    }
    const std::uint64_t cell =
        std::uint64_t(i - 1) * std::uint64_t(n2) + std::uint64_t(j - 1);
    if (!seen.insert(cell).second) {
      throw ParseError("read_matrix_market: duplicate coordinate", lineno);
    }
    rows.push_back(static_cast<Index>(i - 1));
    cols.push_back(static_cast<Index>(j - 1));
    vals.push_back(v);
    ++count;
  }
  if (count != m) {
    throw ParseError("read_matrix_market: fewer entries than declared",
                     lineno);
  }
  return ObservationSet(n1, n2, std::move(rows), std::move(cols),
                        std::move(vals));
}

// Dense factors are written in array format, column-major per the format's
// convention.
inline void write_dense_matrix_market(const Mat& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_dense_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << " " << a.cols() << "\n";
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out << detail::format_g17(a(i, j)) << "\n";
    }
  }
  if (!out) throw IoError("write_dense_matrix_market: write failed");
}

inline Mat read_dense_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_dense_matrix_market: cannot open " + path);
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) {
    throw ParseError("read_dense_matrix_market: empty file", 1);
  }
  ++lineno;
  const std::string header = detail::lower(line);
  if (header.rfind("%%matrixmarket", 0) != 0 ||
      header.find("array") == std::string::npos) {
    throw ParseError("read_dense_matrix_market: malformed header", lineno);
  }
  Index rows = 0, cols = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    if (!(ss >> rows >> cols)) {
      throw ParseError("read_dense_matrix_market: malformed size line", lineno);
    }
    have_size = true;
    break;
  }
  if (!have_size || rows < 1 || cols < 1) {
    throw ParseError("read_dense_matrix_market: missing size line", lineno);
  }
  Mat a(rows, cols);
  Index next = 0;
  const Index total = rows * cols;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (next == total) {
      throw ParseError("read_dense_matrix_market: more values than declared",
                       lineno);
    }
    std::istringstream ss(line);
    double v = 0.0;
    if (!(ss >> v)) {
      throw ParseError("read_dense_matrix_market: malformed value", lineno);
    }
    a(next % rows, next / rows) = v;
    ++next;
  }
  if (next != total) {
    throw ParseError("read_dense_matrix_market: fewer values than declared",
                     lineno);
  }
  return a;
}

}  // namespace liftmc
