#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dcc/types.hpp"

namespace dcc {

/// Dense feature matrix, one datapoint per row, with optional ground-truth
/// labels. Values are validated to be finite on load.
struct DataMatrix {
  Matrix values;  // n_points x n_dims
  std::optional<std::vector<int>> labels;

  Index n_points() const { return values.rows(); }
  Index n_dims() const { return values.cols(); }
};

enum class MatrixFormat { Csv, Binary };

MatrixFormat matrix_format_from_string(const std::string& name);

DataMatrix load_matrix(const std::string& path, MatrixFormat format);
void save_matrix(const std::string& path, const Matrix& values, MatrixFormat format);

/// Per-feature min-max rescale to [0,1]. Constant columns map to all zeros.
DataMatrix normalize_features(const DataMatrix& m);
void normalize_features_in_place(Matrix& values);

/// One integer per line; arbitrary codes are relabeled to 0..K-1 in sorted
/// code order. Empty file gives an empty vector.
std::vector<int> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<int>& labels);

/// Attaches labels, enforcing the length invariant.
void attach_labels(DataMatrix& m, std::vector<int> labels);

}  // namespace dcc
