#pragma once

#include <vector>

#include "dcc/types.hpp"

namespace dcc {

/// Joint counts of two labelings over their observed classes.
struct ContingencyTable {
  Matrix counts;  // R x C, counts[u][v] = |{i : c_i = u-th class, chat_i = v-th class}|
  Vector row_sums;
  Vector col_sums;
  double n = 0.0;
};

ContingencyTable contingency(const std::vector<int>& c, const std::vector<int>& c_hat);

enum class TableAxis { Rows, Cols };

/// Marginal entropy in nats, 0 ln 0 := 0.
double entropy(const ContingencyTable& t, TableAxis axis);

double mutual_information(const ContingencyTable& t);

/// Exact E[MI] under the hypergeometric permutation model, computed with
/// log-factorials.
double expected_mi(const ContingencyTable& t);

/// (MI - E[MI]) / (sqrt(H(c) H(chat)) - E[MI]); degenerate denominators give
/// 1 for identical partitions and 0 otherwise.
double ami(const std::vector<int>& c, const std::vector<int>& c_hat);

/// MI / sqrt(H(c) H(chat)), degenerate case as in ami.
double nmi(const std::vector<int>& c, const std::vector<int>& c_hat);

/// Best accuracy over injective mappings of predicted classes onto true
/// classes (optimal assignment on the padded contingency table).
double acc(const std::vector<int>& c, const std::vector<int>& c_hat);

/// Minimum-cost assignment for a square cost matrix; returns per-row column
/// choices.
std::vector<int> hungarian_assignment(const Matrix& cost);

}  // namespace dcc
