#include "dcc/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "binio.hpp"

namespace dcc {

namespace {

constexpr char kMatrixMagic[4] = {'D', 'C', 'M', '1'};

std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error("io-error", "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error("io-error", "cannot open '" + path + "' for writing");
  return out;
}

double parse_value(const std::string& token, Index row, Index col) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    // from_chars accepts "nan"/"inf"; anything it rejects is non-numeric.
    std::ostringstream msg;
    msg << "non-numeric token '" << token << "' at row " << row << ", column " << col;
    throw Error("parse-error", msg.str());
  }
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite value at row " << row << ", column " << col;
    throw Error("non-finite-value", msg.str());
  }
  return value;
}

Matrix load_csv(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  Index expected_cols = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string token;
    while (std::getline(ss, token, ',')) {
      row.push_back(parse_value(token, static_cast<Index>(rows.size()),
                                static_cast<Index>(row.size())));
    }
    if (expected_cols < 0) {
      expected_cols = static_cast<Index>(row.size());
    } else if (static_cast<Index>(row.size()) != expected_cols) {
      std::ostringstream msg;
      msg << "row " << rows.size() << " has " << row.size() << " fields, expected "
          << expected_cols;
      throw Error("parse-error", msg.str());
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), std::max<Index>(expected_cols, 0));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

Matrix load_binary(const std::string& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMatrixMagic, 4) != 0)
    throw Error("parse-error", "'" + path + "' is not a binary matrix file");
  const auto rows = detail::read_raw<std::uint64_t>(in, "matrix header");
  const auto cols = detail::read_raw<std::uint64_t>(in, "matrix header");
  Matrix m = detail::read_matrix_payload(in, static_cast<Index>(rows), static_cast<Index>(cols),
                                         "matrix payload");
  if (!m.allFinite()) throw Error("non-finite-value", "binary matrix contains NaN/Inf");
  return m;
}

}  // namespace

MatrixFormat matrix_format_from_string(const std::string& name) {
  if (name == "csv") return MatrixFormat::Csv;
  if (name == "binary" || name == "bin") return MatrixFormat::Binary;
  throw Error("config-error", "unknown matrix format '" + name + "' (expected csv|binary)");
}

DataMatrix load_matrix(const std::string& path, MatrixFormat format) {
  DataMatrix dm;
  dm.values = format == MatrixFormat::Csv ? load_csv(path) : load_binary(path);
  return dm;
}

void save_matrix(const std::string& path, const Matrix& values, MatrixFormat format) {
  if (format == MatrixFormat::Csv) {
    auto out = open_output(path);
    out.precision(17);
    for (Index r = 0; r < values.rows(); ++r) {
      for (Index c = 0; c < values.cols(); ++c) {
        if (c) out << ',';
        out << values(r, c);
      }
      out << '\n';
    }
    return;
  }
  auto out = open_output(path, std::ios::out | std::ios::binary);
  out.write(kMatrixMagic, 4);
  detail::write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(values.rows()));
  detail::write_raw<std::uint64_t>(out, static_cast<std::uint64_t>(values.cols()));
  detail::write_matrix_payload(out, values);
  if (!out) throw Error("io-error", "failed to write '" + path + "'");
}

void normalize_features_in_place(Matrix& values) {
  for (Index c = 0; c < values.cols(); ++c) {
    auto col = values.col(c);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (hi > lo) {
      col = (col.array() - lo) / (hi - lo);
    } else {
      col.setZero();  // constant column, kept inert
    }
  }
}

DataMatrix normalize_features(const DataMatrix& m) {
  DataMatrix out = m;
  normalize_features_in_place(out.values);
  return out;
}

std::vector<int> load_labels(const std::string& path) {
  auto in = open_input(path);
  std::vector<long> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* begin = line.data();
    const char* end = begin + line.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
    long value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
      throw Error("parse-error",
                  "invalid label '" + line + "' at line " + std::to_string(raw.size() + 1));
    raw.push_back(value);
  }
  // relabel to contiguous 0..K-1 in sorted code order
  std::vector<long> codes = raw;
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  std::vector<int> labels(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    labels[i] = static_cast<int>(std::lower_bound(codes.begin(), codes.end(), raw[i]) -
                                 codes.begin());
  }
  return labels;
}

void save_labels(const std::string& path, const std::vector<int>& labels) {
  auto out = open_output(path);
  for (int label : labels) out << label << '\n';
  if (!out) throw Error("io-error", "failed to write '" + path + "'");
}

void attach_labels(DataMatrix& m, std::vector<int> labels) {
  if (static_cast<Index>(labels.size()) != m.n_points()) {
    std::ostringstream msg;
    msg << "label count " << labels.size() << " does not match " << m.n_points() << " datapoints";
    throw Error("length-mismatch", msg.str());
  }
  m.labels = std::move(labels);
}

}  // namespace dcc
