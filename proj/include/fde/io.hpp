#pragma once

// CSV, "FDE1" binary and JSON persistence.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fde/grid.hpp"
#include "fde/sensitivity.hpp"

namespace fde {

static_assert(std::endian::native == std::endian::little, "the FDE1 writer assumes a little-endian host");

/// Shortest decimal text that round-trips the double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + file.string() + " for writing");
  out << text;
  if (!out) throw NumericalError("write failed: " + file.string());
}

inline std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Columns t, <prefix>1, ..., <prefix>m.
inline std::string path_to_csv(const GridPath& p, const std::string& prefix = "y") {
  std::string s = "t";
  for (std::size_t c = 0; c < p.dim(); ++c) s += "," + prefix + std::to_string(c + 1);
  s += "\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += format_double(p.grid().node(i));
    for (std::size_t c = 0; c < p.dim(); ++c) s += "," + format_double(p(i, c));
    s += "\n";
  }
  return s;
}

/// Parses the CSV written by path_to_csv; the time column must be uniform.
inline GridPath path_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: empty input");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("csv: bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ValidationError("csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2 || rows.front().size() < 2) throw ValidationError("csv: need two rows and a value column");
  const UniformGrid grid(rows.front()[0], rows.back()[0], rows.size() - 1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (std::abs(rows[i][0] - grid.node(i)) > 1e-9 * std::max(1.0, std::abs(grid.node(i))))
      throw ValidationError("csv: time column is not uniform");
  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size() - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 1; c < rows[i].size(); ++c)
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c - 1)) = rows[i][c];
  return GridPath(grid, std::move(v));
}

/// FDE1 record: magic, H (f64), d (u32), n (u32), then n rows of d + 1 f64 values.
struct Fde1Table {
  double H = 0.0;
  std::uint32_t d = 0;
  std::vector<double> rows;  // n * (d + 1), row-major

  std::uint32_t n() const { return d + 1 == 0 ? 0 : static_cast<std::uint32_t>(rows.size() / (d + 1)); }
};

inline std::string fde1_encode(const Fde1Table& t) {
  if (t.rows.size() % (t.d + 1) != 0) throw ValidationError("FDE1: row data does not match d");
  std::string s = "FDE1";
  auto put = [&s](const void* p, std::size_t k) { s.append(static_cast<const char*>(p), k); };
  const std::uint32_t n = t.n();
  put(&t.H, 8);
  put(&t.d, 4);
  put(&n, 4);
  put(t.rows.data(), t.rows.size() * 8);
  return s;
}

inline Fde1Table fde1_decode(const std::string& bytes) {
  if (bytes.size() < 20 || bytes.compare(0, 4, "FDE1") != 0) throw ValidationError("FDE1: bad magic or short header");
  Fde1Table t;
  std::uint32_t n = 0;
  std::memcpy(&t.H, bytes.data() + 4, 8);
  std::memcpy(&t.d, bytes.data() + 12, 4);
  std::memcpy(&n, bytes.data() + 16, 4);
  const std::size_t count = static_cast<std::size_t>(n) * (t.d + 1);
  if (bytes.size() != 20 + 8 * count) throw ValidationError("FDE1: payload size does not match header");
  t.rows.resize(count);
  std::memcpy(t.rows.data(), bytes.data() + 20, 8 * count);
  return t;
}

/// Path as FDE1 rows (t, B1..Bd).
inline Fde1Table path_to_fde1(const GridPath& p, double H) {
  Fde1Table t;
  t.H = H;
  t.d = static_cast<std::uint32_t>(p.dim());
  for (std::size_t i = 0; i < p.size(); ++i) {
    t.rows.push_back(p.grid().node(i));
    for (std::size_t c = 0; c < p.dim(); ++c) t.rows.push_back(p(i, c));
  }
  return t;
}

inline GridPath path_from_fde1(const Fde1Table& t) {
  const std::uint32_t n = t.n();
  if (n < 2 || t.d == 0) throw ValidationError("FDE1: need two rows and one value column");
  const std::size_t w = t.d + 1;
  const UniformGrid grid(t.rows[0], t.rows[(n - 1) * w], n - 1);
  Eigen::MatrixXd v(n, t.d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < t.d; ++c) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = t.rows[i * w + 1 + c];
  return GridPath(grid, std::move(v));
}

/// Dense listing of Phi_t(r) over r <= t: columns r, t, i, j, value (indices 1-based).
inline std::string sensitivity_to_csv(const SensitivityField& f) {
  std::string s = "r,t,i,j,value\n";
  for (std::size_t k = 0; k < f.n_r(); ++k)
    for (std::size_t ti = k * f.r_stride; ti < f.grid.n_nodes(); ++ti)
      for (std::size_t i = 0; i < f.n; ++i)
        for (std::size_t j = 0; j < f.d; ++j)
          s += format_double(f.r_node(k)) + "," + format_double(f.grid.node(ti)) + "," + std::to_string(i + 1) + "," +
               std::to_string(j + 1) + "," + format_double(f.value(k, ti, i, j)) + "\n";
  return s;
}

/// Same rows as sensitivity_to_csv in FDE1 framing (d = 4 columns after r).
inline Fde1Table sensitivity_to_fde1(const SensitivityField& f, double H) {
  Fde1Table t;
  t.H = H;
  t.d = 4;
  for (std::size_t k = 0; k < f.n_r(); ++k)
    for (std::size_t ti = k * f.r_stride; ti < f.grid.n_nodes(); ++ti)
      for (std::size_t i = 0; i < f.n; ++i)
        for (std::size_t j = 0; j < f.d; ++j) {
          t.rows.push_back(f.r_node(k));
          t.rows.push_back(f.grid.node(ti));
          t.rows.push_back(static_cast<double>(i + 1));
          t.rows.push_back(static_cast<double>(j + 1));
          t.rows.push_back(f.value(k, ti, i, j));
        }
  return t;
}

/// 64-bit FNV-1a as 16 hex digits.
inline std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fde
