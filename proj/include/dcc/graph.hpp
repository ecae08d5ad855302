#pragma once

#include <string>
#include <vector>

#include "dcc/types.hpp"

namespace dcc {

enum class Metric { Cosine, Euclidean };

Metric metric_from_string(const std::string& name);
std::string to_string(Metric metric);

struct NeighborEntry {
  int index;
  double distance;
};

/// Directed k-nearest-neighbor lists, ties broken by lower index.
using NeighborLists = std::vector<std::vector<NeighborEntry>>;

/// Exact brute-force kNN under the given metric. `points` is N x D.
/// Cosine requires no all-zero rows.
NeighborLists knn_neighbors(const Matrix& points, int k, Metric metric);
inline NeighborLists cosine_knn(const Matrix& points, int k) {
  return knn_neighbors(points, k, Metric::Cosine);
}

struct GraphEdge {
  int i, j;         // i < j
  double distance;  // construction-metric distance
  double weight;    // w_ij, filled by compute_weights
};

/// Undirected mutual-kNN graph augmented by the MST of the symmetrized kNN
/// graph; connected, no self-loops, no duplicates.
struct NeighborhoodGraph {
  int n_nodes = 0;
  std::vector<GraphEdge> edges;  // sorted by (i, j)
  std::vector<int> degrees;      // n_i on the augmented edge set
  double mean_degree = 0.0;

  Index n_edges() const { return static_cast<Index>(edges.size()); }
};

/// Edge (i,j) iff j in kNN(i) and i in kNN(j). Weights unset.
std::vector<GraphEdge> mutual_knn_edges(const NeighborLists& neighbors);

/// Mutual edges united with the MST of the symmetrized kNN graph. When that
/// graph is disconnected, components are bridged greedily by the globally
/// shortest inter-component pair, so the result is always connected for
/// N >= 2. `points` supplies distances for bridging.
std::vector<GraphEdge> mst_augment(const std::vector<GraphEdge>& mutual_edges,
                                   const NeighborLists& neighbors, const Matrix& points,
                                   Metric metric);

/// Fills degrees and w_ij = mean_degree / sqrt(n_i n_j).
void compute_weights(NeighborhoodGraph& graph);

/// kNN -> mutual -> MST augment -> weights.
NeighborhoodGraph build_graph(const Matrix& points, int k, Metric metric);

int count_components(int n_nodes, const std::vector<GraphEdge>& edges);

// ---------------------------------------------------------------------------
// Spectral quantities

struct PowerIterationInfo {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value by power iteration (tolerance 1e-9, cap 10*N,
/// deterministic start). Non-convergence is reported via `info`, the best
/// estimate is still returned.
double spectral_norm_dense(const Matrix& sym, PowerIterationInfo* info = nullptr);

/// ||A||_2 for A = sum_{(i,j) in E} w_ij (e_i - e_j)(e_i - e_j)^T, applied
/// matrix-free as the weighted graph Laplacian.
double laplacian_spectral_norm(const NeighborhoodGraph& graph, PowerIterationInfo* info = nullptr);

/// ||Y||_2 via power iteration on Y^T Y. `y` is d x N.
double embedding_spectral_norm(const Matrix& y, PowerIterationInfo* info = nullptr);

/// lambda = ||Y||_2 / ||A||_2, fixed for the whole run.
double compute_lambda(const Matrix& y, const NeighborhoodGraph& graph);

/// Mean distance of each y_i to the embedding centroid.
double compute_delta1(const Matrix& y);

/// Mean of the bottom max(1, floor(0.01 |E|)) edge distances in the embedding.
double compute_delta2(const Matrix& y, const NeighborhoodGraph& graph);

// ---------------------------------------------------------------------------
// Persistence: plain-text edge list with an N/k/metric header.

void save_graph(const std::string& path, const NeighborhoodGraph& graph, int k, Metric metric);
NeighborhoodGraph load_graph(const std::string& path, int* k = nullptr, Metric* metric = nullptr);

}  // namespace dcc
