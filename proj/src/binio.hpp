#pragma once

// Little-endian raw readers/writers shared by the binary matrix and
// checkpoint formats. The payloads are IEEE float64; on the supported
// (little-endian) targets a plain memcpy round trip is bit-exact.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "dcc/types.hpp"

namespace dcc::detail {

template <typename T>
void write_raw(std::ostream& os, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const char* what) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw Error("parse-error", std::string("truncated file while reading ") + what);
  return value;
}

inline void write_matrix_payload(std::ostream& os, const Matrix& m) {
  // row-major payload regardless of in-memory layout
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) write_raw(os, m(r, c));
}

inline Matrix read_matrix_payload(std::istream& is, Index rows, Index cols, const char* what) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = read_raw<double>(is, what);
  return m;
}

inline void write_tagged_matrix(std::ostream& os, const Matrix& m) {
  write_raw<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  write_raw<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  write_matrix_payload(os, m);
}

inline Matrix read_tagged_matrix(std::istream& is, const char* what) {
  const auto rows = read_raw<std::uint64_t>(is, what);
  const auto cols = read_raw<std::uint64_t>(is, what);
  return read_matrix_payload(is, static_cast<Index>(rows), static_cast<Index>(cols), what);
}

}  // namespace dcc::detail
