#include "dcc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dcc {

namespace {

constexpr double kDegenerateEps = 1e-12;

std::vector<int> compact_codes(const std::vector<int>& labels, int* n_classes) {
  std::vector<int> codes = labels;
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = static_cast<int>(std::lower_bound(codes.begin(), codes.end(), labels[i]) -
                              codes.begin());
  *n_classes = static_cast<int>(codes.size());
  return out;
}

void check_lengths(const std::vector<int>& c, const std::vector<int>& c_hat) {
  if (c.size() != c_hat.size())
    throw Error("length-mismatch", "labelings have different lengths (" +
                                       std::to_string(c.size()) + " vs " +
                                       std::to_string(c_hat.size()) + ")");
  if (c.empty()) throw Error("length-mismatch", "labelings are empty");
}

double marginal_entropy(const Vector& sums, double n) {
  double h = 0.0;
  for (Index k = 0; k < sums.size(); ++k) {
    const double p = sums[k] / n;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// Two partitions are the same iff they induce the same co-clustering, which
// canonical first-occurrence relabeling detects.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, int> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int ca = ra.emplace(a[i], static_cast<int>(ra.size())).first->second;
    const int cb = rb.emplace(b[i], static_cast<int>(rb.size())).first->second;
    if (ca != cb) return false;
  }
  return true;
}

}  // namespace

ContingencyTable contingency(const std::vector<int>& c, const std::vector<int>& c_hat) {
  check_lengths(c, c_hat);
  for (int v : c)
    if (v < 0) throw Error("parse-error", "labels must be nonnegative");
  for (int v : c_hat)
    if (v < 0) throw Error("parse-error", "labels must be nonnegative");

  int rows = 0, cols = 0;
  const std::vector<int> u = compact_codes(c, &rows);
  const std::vector<int> v = compact_codes(c_hat, &cols);

  ContingencyTable t;
  t.counts = Matrix::Zero(rows, cols);
  for (std::size_t i = 0; i < u.size(); ++i) t.counts(u[i], v[i]) += 1.0;
  t.row_sums = t.counts.rowwise().sum();
  t.col_sums = t.counts.colwise().sum();
  t.n = static_cast<double>(u.size());
  return t;
}

double entropy(const ContingencyTable& t, TableAxis axis) {
  return marginal_entropy(axis == TableAxis::Rows ? t.row_sums : t.col_sums, t.n);
}

double mutual_information(const ContingencyTable& t) {
  double mi = 0.0;
  for (Index u = 0; u < t.counts.rows(); ++u) {
    for (Index v = 0; v < t.counts.cols(); ++v) {
      const double nuv = t.counts(u, v);
      if (nuv <= 0.0) continue;
      mi += (nuv / t.n) * std::log(t.n * nuv / (t.row_sums[u] * t.col_sums[v]));
    }
  }
  return mi;
}

double expected_mi(const ContingencyTable& t) {
  const int n = static_cast<int>(t.n);
  std::vector<double> lfact(n + 1, 0.0);
  for (int i = 2; i <= n; ++i) lfact[i] = lfact[i - 1] + std::log(static_cast<double>(i));

  double emi = 0.0;
  for (Index u = 0; u < t.row_sums.size(); ++u) {
    const int a = static_cast<int>(t.row_sums[u]);
    for (Index v = 0; v < t.col_sums.size(); ++v) {
      const int b = static_cast<int>(t.col_sums[v]);
      const int lo = std::max(1, a + b - n);
      const int hi = std::min(a, b);
      // log of the constant part of the hypergeometric pmf for this cell
      const double base = lfact[a] + lfact[b] + lfact[n - a] + lfact[n - b] - lfact[n];
      for (int nij = lo; nij <= hi; ++nij) {
        const double log_p = base - lfact[nij] - lfact[a - nij] - lfact[b - nij] -
                             lfact[n - a - b + nij];
        const double term = (static_cast<double>(nij) / n) *
                            std::log(static_cast<double>(n) * nij /
                                     (static_cast<double>(a) * b));
        emi += term * std::exp(log_p);
      }
    }
  }
  return emi;
}

double ami(const std::vector<int>& c, const std::vector<int>& c_hat) {
  check_lengths(c, c_hat);
  const ContingencyTable t = contingency(c, c_hat);
  const double mi = mutual_information(t);
  const double emi = expected_mi(t);
  const double denom = std::sqrt(entropy(t, TableAxis::Rows) * entropy(t, TableAxis::Cols)) - emi;
  if (std::abs(denom) <= kDegenerateEps) return same_partition(c, c_hat) ? 1.0 : 0.0;
  return (mi - emi) / denom;
}

double nmi(const std::vector<int>& c, const std::vector<int>& c_hat) {
  check_lengths(c, c_hat);
  const ContingencyTable t = contingency(c, c_hat);
  const double denom = std::sqrt(entropy(t, TableAxis::Rows) * entropy(t, TableAxis::Cols));
  if (denom <= kDegenerateEps) return same_partition(c, c_hat) ? 1.0 : 0.0;
  return mutual_information(t) / denom;
}

std::vector<int> hungarian_assignment(const Matrix& cost) {
  // Shortest-augmenting-path formulation with row/column potentials.
  if (cost.rows() != cost.cols()) throw Error("shape-mismatch", "cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> way(n + 1, 0), matched_row(n + 1, 0);  // matched_row[col] = row

  for (int r = 1; r <= n; ++r) {
    matched_row[0] = r;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = matched_row[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[matched_row[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (matched_row[j0] != 0);
    do {
      const int j1 = way[j0];
      matched_row[j0] = matched_row[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (matched_row[j] > 0) row_to_col[matched_row[j] - 1] = j - 1;
  return row_to_col;
}

double acc(const std::vector<int>& c, const std::vector<int>& c_hat) {
  check_lengths(c, c_hat);
  const ContingencyTable t = contingency(c, c_hat);
  const int size = static_cast<int>(std::max(t.counts.rows(), t.counts.cols()));
  // pad to square, negate counts so minimum cost = maximum matched points
  Matrix cost = Matrix::Zero(size, size);
  cost.topLeftCorner(t.counts.rows(), t.counts.cols()) = -t.counts;
  const std::vector<int> assign = hungarian_assignment(cost);
  double matched = 0.0;
  for (int r = 0; r < size; ++r)
    if (assign[r] >= 0) matched -= cost(r, assign[r]);
  return matched / t.n;
}

}  // namespace dcc
