#pragma once

// Text formats: dataset CSVs, basis CSVs and key = value config files.
//
//   PCA data      user_id,x_0,...,x_{d-1}     one sample per row
//   linear data   user_id,y,x_0,...,x_{d-1}
//   basis         d rows of k comma-separated values, no header
//
// Rows of one user need not be contiguous; users keep first-appearance order.
// Numbers are written with std::to_chars, so output never depends on locale.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "hetpca/errors.hpp"
#include "hetpca/linalg.hpp"
#include "hetpca/linmodel.hpp"
#include "hetpca/pca.hpp"

namespace hetpca::io {

/// Locale-independent rendering. `precision` 0 gives the shortest
/// round-tripping form, otherwise that many significant digits.
inline std::string format_double(double x, int precision = 0) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::to_chars_result res = precision > 0
                                 ? std::to_chars(buf, buf + sizeof buf, x,
                                                 std::chars_format::general, precision)
                                 : std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "not a number: '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) throw ParseError(line, "non-finite value: '" + std::string(s) + "'");
  return v;
}

enum class DataKind { Pca, Linear };

using Dataset = std::variant<PcaDataset, LinearDataset>;

namespace detail {

struct Grouped {
  std::vector<std::string> ids;
  std::vector<std::vector<std::vector<double>>> rows;  // per user, per sample
};

inline Grouped read_grouped(std::istream& in, std::size_t& width, DataKind& kind) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(1, "empty input");
  const auto cols = split(trim(header), ',');
  if (cols.size() < 2 || cols[0] != "user_id") {
    throw ParseError(1, "header must start with user_id");
  }
  kind = cols[1] == "y" ? DataKind::Linear : DataKind::Pca;
  const std::size_t first_x = kind == DataKind::Linear ? 2 : 1;
  if (cols.size() <= first_x) throw ParseError(1, "header has no x columns");
  for (std::size_t c = first_x; c < cols.size(); ++c) {
    const std::string expect = "x_" + std::to_string(c - first_x);
    if (cols[c] != expect) {
      throw ParseError(1, "expected column '" + expect + "', got '" + std::string(cols[c]) + "'");
    }
  }
  width = cols.size() - 1;

  Grouped g;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, ',');
    if (cells.size() != cols.size()) {
      throw ParseError(lineno, "expected " + std::to_string(cols.size()) + " fields, got " +
                                   std::to_string(cells.size()));
    }
    const std::string id(cells[0]);
    if (id.empty()) throw ParseError(lineno, "empty user_id");
    auto [it, inserted] = index.emplace(id, g.ids.size());
    if (inserted) {
      g.ids.push_back(id);
      g.rows.emplace_back();
    }
    std::vector<double> vals(width);
    for (std::size_t c = 1; c < cells.size(); ++c) vals[c - 1] = parse_double(cells[c], lineno);
    g.rows[it->second].push_back(std::move(vals));
  }
  if (g.ids.empty()) throw ParseError(lineno, "no data rows");
  return g;
}

}  // namespace detail

/// Reads either CSV layout, detected from the header (`y` as the second column
/// means linear data).
inline Dataset read_dataset(std::istream& in) {
  std::size_t width = 0;
  DataKind kind{};
  auto g = detail::read_grouped(in, width, kind);
  if (kind == DataKind::Pca) {
    PcaDataset data;
    data.d = width;
    data.ids = std::move(g.ids);
    for (const auto& rows : g.rows) {
      Matrix b(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
      }
      data.users.push_back(std::move(b));
    }
    return data;
  }
  LinearDataset data;
  data.d = width - 1;
  data.ids = std::move(g.ids);
  for (const auto& rows : g.rows) {
    LinearBlock b{Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1)),
                  Vector(static_cast<Eigen::Index>(rows.size()))};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto rr = static_cast<Eigen::Index>(r);
      b.y(rr) = rows[r][0];
      for (std::size_t c = 1; c < width; ++c) b.x(rr, static_cast<Eigen::Index>(c - 1)) = rows[r][c];
    }
    data.users.push_back(std::move(b));
  }
  return data;
}

inline Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_dataset(in);
}

inline void write_pca_csv(std::ostream& out, const PcaDataset& data) {
  out << "user_id";
  for (std::size_t c = 0; c < data.d; ++c) out << ",x_" << c;
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Matrix& b = data.users[i];
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      out << data.label(i);
      for (Eigen::Index c = 0; c < b.cols(); ++c) out << ',' << format_double(b(r, c), 17);
      out << '\n';
    }
  }
}

inline void write_linear_csv(std::ostream& out, const LinearDataset& data) {
  out << "user_id,y";
  for (std::size_t c = 0; c < data.d; ++c) out << ",x_" << c;
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto& b = data.users[i];
    for (Eigen::Index r = 0; r < b.x.rows(); ++r) {
      out << data.label(i) << ',' << format_double(b.y(r), 17);
      for (Eigen::Index c = 0; c < b.x.cols(); ++c) out << ',' << format_double(b.x(r, c), 17);
      out << '\n';
    }
  }
}

/// d rows x k columns, 17 significant digits.
inline void write_basis(std::ostream& out, const Basis& basis) {
  const Matrix& m = basis.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c), 17);
    }
    out << '\n';
  }
}

/// Reads a basis file. Matrices orthonormal to 1e-10 are taken as is; ones
/// within 1e-6 (for example hand-written with few digits) are
/// re-orthonormalized, which keeps their span; anything else is rejected.
inline Basis read_basis(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<double> vals;
    for (auto cell : split(t, ',')) vals.push_back(parse_double(cell, lineno));
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw ParseError(lineno, "row has " + std::to_string(vals.size()) + " columns, expected " +
                                   std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError(lineno, "empty basis file");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  if (m.cols() < 1 || m.cols() >= m.rows()) {
    throw DimensionError("basis file must have d rows and 1 <= k < d columns");
  }
  const double err = (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
  if (err <= kOrthonormalTol) return Basis(std::move(m));
  if (err <= 1e-6) return Basis::orthonormalize(m);
  throw InputError("basis columns are not orthonormal (max |B^T B - I| = " + format_double(err) +
                   ")");
}

inline Basis read_basis_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_basis(in);
}

/// One `key = value` entry with the line it came from.
struct ConfigEntry {
  std::string value;
  std::size_t line = 0;
};

/// Parses `key = value` lines; '#' starts a comment, blank lines are ignored.
/// Keys not in `allowed` (when non-empty) are rejected with their line number.
inline std::map<std::string, ConfigEntry> parse_config(std::istream& in,
                                                       const std::vector<std::string>& allowed) {
  std::map<std::string, ConfigEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view t = line;
    if (const auto hash = t.find('#'); hash != std::string_view::npos) t = t.substr(0, hash);
    t = trim(t);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected 'key = value'");
    const std::string key(trim(t.substr(0, eq)));
    const std::string value(trim(t.substr(eq + 1)));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (!allowed.empty() &&
        std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(lineno, "unknown key '" + key + "'");
    }
    if (out.count(key)) throw ParseError(lineno, "duplicate key '" + key + "'");
    out[key] = ConfigEntry{value, lineno};
  }
  return out;
}

}  // namespace hetpca::io
