#include "dcc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace dcc {

namespace {

struct UnionFind {
  std::vector<int> parent, rank_;

  explicit UnionFind(int n) : parent(n), rank_(n, 0) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }
};

constexpr Index kBlock = 512;

// Pairwise distances from a block of query rows to all rows, via one GEMM.
Matrix block_distances(const Matrix& points, const Matrix& normalized, const Vector& sq_norms,
                       Index begin, Index rows, Metric metric) {
  if (metric == Metric::Cosine) {
    Matrix sim = normalized.middleRows(begin, rows) * normalized.transpose();
    return (1.0 - sim.array()).matrix();
  }
  Matrix cross = points.middleRows(begin, rows) * points.transpose();
  Matrix sq = (-2.0 * cross).colwise() + sq_norms.segment(begin, rows);
  sq.rowwise() += sq_norms.transpose();
  return sq.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

Metric metric_from_string(const std::string& name) {
  if (name == "cosine") return Metric::Cosine;
  if (name == "euclidean") return Metric::Euclidean;
  throw Error("config-error", "unknown metric '" + name + "' (expected cosine|euclidean)");
}

std::string to_string(Metric metric) {
  return metric == Metric::Cosine ? "cosine" : "euclidean";
}

NeighborLists knn_neighbors(const Matrix& points, int k, Metric metric) {
  const Index n = points.rows();
  if (k < 1) throw Error("config-error", "k must be at least 1");
  if (k >= n) throw Error("config-error", "k must be smaller than the number of points");

  Matrix normalized;
  Vector sq_norms;
  if (metric == Metric::Cosine) {
    Vector norms = points.rowwise().norm();
    for (Index i = 0; i < n; ++i)
      if (norms[i] == 0.0)
        throw Error("zero-vector-row",
                    "row " + std::to_string(i) + " is all zeros; cosine distance is undefined");
    normalized = points.array().colwise() / norms.array();
  } else {
    sq_norms = points.rowwise().squaredNorm();
  }

  NeighborLists lists(n);
  std::vector<std::pair<double, int>> cand;
  for (Index begin = 0; begin < n; begin += kBlock) {
    const Index rows = std::min(kBlock, n - begin);
    Matrix dist = block_distances(points, normalized, sq_norms, begin, rows, metric);
    for (Index r = 0; r < rows; ++r) {
      const Index i = begin + r;
      cand.clear();
      cand.reserve(n - 1);
      for (Index j = 0; j < n; ++j)
        if (j != i) cand.emplace_back(dist(r, j), static_cast<int>(j));
      // ties broken by lower index via the pair ordering
      std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
      std::sort(cand.begin(), cand.begin() + k);
      lists[i].reserve(k);
      for (int q = 0; q < k; ++q) lists[i].push_back({cand[q].second, cand[q].first});
    }
  }
  return lists;
}

std::vector<GraphEdge> mutual_knn_edges(const NeighborLists& neighbors) {
  const int n = static_cast<int>(neighbors.size());
  std::vector<std::vector<int>> sorted_ids(n);
  for (int i = 0; i < n; ++i) {
    sorted_ids[i].reserve(neighbors[i].size());
    for (const auto& e : neighbors[i]) sorted_ids[i].push_back(e.index);
    std::sort(sorted_ids[i].begin(), sorted_ids[i].end());
  }
  std::vector<GraphEdge> edges;
  for (int i = 0; i < n; ++i) {
    for (const auto& e : neighbors[i]) {
      const int j = e.index;
      if (j <= i) continue;  // emit each unordered pair once, from the lower side
      if (std::binary_search(sorted_ids[j].begin(), sorted_ids[j].end(), i))
        edges.push_back({i, j, e.distance, 0.0});
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  return edges;
}

std::vector<GraphEdge> mst_augment(const std::vector<GraphEdge>& mutual_edges,
                                   const NeighborLists& neighbors, const Matrix& points,
                                   Metric metric) {
  const int n = static_cast<int>(neighbors.size());
  if (n < 2) throw Error("config-error", "graph construction needs at least 2 points");

  // symmetrized kNN edge set, deduplicated
  std::vector<GraphEdge> knn_edges;
  for (int i = 0; i < n; ++i) {
    for (const auto& e : neighbors[i]) {
      const int a = std::min(i, e.index);
      const int b = std::max(i, e.index);
      knn_edges.push_back({a, b, e.distance, 0.0});
    }
  }
  auto pair_less = [](const GraphEdge& x, const GraphEdge& y) {
    return std::tie(x.i, x.j) < std::tie(y.i, y.j);
  };
  std::sort(knn_edges.begin(), knn_edges.end(), pair_less);
  knn_edges.erase(std::unique(knn_edges.begin(), knn_edges.end(),
                              [](const GraphEdge& x, const GraphEdge& y) {
                                return x.i == y.i && x.j == y.j;
                              }),
                  knn_edges.end());

  // Kruskal on the symmetrized graph; a forest if it is disconnected
  std::vector<GraphEdge> by_weight = knn_edges;
  std::sort(by_weight.begin(), by_weight.end(), [](const GraphEdge& x, const GraphEdge& y) {
    return std::tie(x.distance, x.i, x.j) < std::tie(y.distance, y.i, y.j);
  });
  UnionFind uf(n);
  std::vector<GraphEdge> result = mutual_edges;
  for (const auto& e : by_weight)
    if (uf.unite(e.i, e.j)) result.push_back(e);

  // Bridge remaining components greedily by the globally shortest
  // inter-component pair; distances computed lazily row by row.
  auto components = [&]() {
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (uf.find(i) == i) ++count;
    return count;
  };
  while (components() > 1) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (uf.find(i) == uf.find(j)) continue;
        double d;
        if (metric == Metric::Cosine) {
          const double denom = points.row(i).norm() * points.row(j).norm();
          d = 1.0 - points.row(i).dot(points.row(j)) / denom;
        } else {
          d = (points.row(i) - points.row(j)).norm();
        }
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    result.push_back({bi, bj, best, 0.0});
    uf.unite(bi, bj);
  }

  // mutual edges and tree edges may overlap
  std::sort(result.begin(), result.end(), pair_less);
  result.erase(std::unique(result.begin(), result.end(),
                           [](const GraphEdge& x, const GraphEdge& y) {
                             return x.i == y.i && x.j == y.j;
                           }),
               result.end());
  return result;
}

void compute_weights(NeighborhoodGraph& graph) {
  graph.degrees.assign(graph.n_nodes, 0);
  for (const auto& e : graph.edges) {
    ++graph.degrees[e.i];
    ++graph.degrees[e.j];
  }
  for (int i = 0; i < graph.n_nodes; ++i)
    if (graph.degrees[i] < 1)
      throw Error("degenerate", "node " + std::to_string(i) + " has no incident edges");
  graph.mean_degree =
      2.0 * static_cast<double>(graph.edges.size()) / static_cast<double>(graph.n_nodes);
  for (auto& e : graph.edges)
    e.weight = graph.mean_degree /
               std::sqrt(static_cast<double>(graph.degrees[e.i]) * graph.degrees[e.j]);
}

NeighborhoodGraph build_graph(const Matrix& points, int k, Metric metric) {
  NeighborhoodGraph graph;
  graph.n_nodes = static_cast<int>(points.rows());
  auto neighbors = knn_neighbors(points, k, metric);
  auto mutual = mutual_knn_edges(neighbors);
  graph.edges = mst_augment(mutual, neighbors, points, metric);
  compute_weights(graph);
  return graph;
}

int count_components(int n_nodes, const std::vector<GraphEdge>& edges) {
  UnionFind uf(n_nodes);
  for (const auto& e : edges) uf.unite(e.i, e.j);
  int count = 0;
  for (int i = 0; i < n_nodes; ++i)
    if (uf.find(i) == i) ++count;
  return count;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kPowerTolerance = 1e-9;

// Power iteration for a symmetric PSD operator; returns the largest
// eigenvalue. The start vector is a fixed pseudo-random draw so results are
// reproducible (an all-ones start would be annihilated by a Laplacian).
template <typename Op>
double power_iteration(Index n, Op&& apply, PowerIterationInfo* info) {
  auto rng = make_rng(0x9e3779b9, /*stream=*/7);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v = Vector::NullaryExpr(n, [&]() { return normal(rng); });
  v.normalize();

  const int max_iter = 10 * static_cast<int>(n);
  double value = 0.0;
  bool converged = false;
  int iter = 0;
  Vector w(n);
  for (iter = 1; iter <= max_iter; ++iter) {
    apply(v, w);
    value = v.dot(w);
    const double residual = (w - value * v).norm();
    const double wnorm = w.norm();
    if (wnorm == 0.0) {
      value = 0.0;
      converged = true;
      break;
    }
    if (residual <= kPowerTolerance * std::max(std::abs(value), 1e-300)) {
      converged = true;
      break;
    }
    v = w / wnorm;
  }
  if (info) {
    info->value = value;
    info->iterations = std::min(iter, max_iter);
    info->converged = converged;
  }
  return value;
}

}  // namespace

double spectral_norm_dense(const Matrix& sym, PowerIterationInfo* info) {
  if (sym.rows() != sym.cols()) throw Error("shape-mismatch", "operator must be square");
  return power_iteration(
      sym.rows(), [&](const Vector& v, Vector& out) { out.noalias() = sym * v; }, info);
}

double laplacian_spectral_norm(const NeighborhoodGraph& graph, PowerIterationInfo* info) {
  return power_iteration(
      graph.n_nodes,
      [&](const Vector& v, Vector& out) {
        out.setZero();
        for (const auto& e : graph.edges) {
          const double diff = e.weight * (v[e.i] - v[e.j]);
          out[e.i] += diff;
          out[e.j] -= diff;
        }
      },
      info);
}

double embedding_spectral_norm(const Matrix& y, PowerIterationInfo* info) {
  // ||Y||_2 = sqrt(lambda_max(Y^T Y)); the N x N operator is applied through
  // two d-dimensional products, nothing N x N is stored.
  Vector tmp(y.rows());
  const double top = power_iteration(
      y.cols(),
      [&](const Vector& v, Vector& out) {
        tmp.noalias() = y * v;
        out.noalias() = y.transpose() * tmp;
      },
      info);
  const double norm = std::sqrt(std::max(top, 0.0));
  if (info) info->value = norm;
  return norm;
}

double compute_lambda(const Matrix& y, const NeighborhoodGraph& graph) {
  const double y_norm = embedding_spectral_norm(y);
  const double a_norm = laplacian_spectral_norm(graph);
  if (!(y_norm > 0.0) || !(a_norm > 0.0))
    throw Error("degenerate", "lambda undefined: zero spectral norm at initialization");
  return y_norm / a_norm;
}

double compute_delta1(const Matrix& y) {
  if (y.cols() < 1) throw Error("shape-mismatch", "empty embedding");
  const Vector centroid = y.rowwise().mean();
  double sum = 0.0;
  for (Index i = 0; i < y.cols(); ++i) sum += (y.col(i) - centroid).norm();
  return sum / static_cast<double>(y.cols());
}

double compute_delta2(const Matrix& y, const NeighborhoodGraph& graph) {
  if (graph.edges.empty()) throw Error("degenerate", "graph has no edges");
  std::vector<double> dists;
  dists.reserve(graph.edges.size());
  for (const auto& e : graph.edges) dists.push_back((y.col(e.i) - y.col(e.j)).norm());
  const std::size_t count =
      std::max<std::size_t>(1, static_cast<std::size_t>(0.01 * static_cast<double>(dists.size())));
  // nth_element leaves the bottom `count` values in the first `count` slots
  std::nth_element(dists.begin(), dists.begin() + (count - 1), dists.end());
  double sum = 0.0;
  for (std::size_t q = 0; q < count; ++q) sum += dists[q];
  return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------

void save_graph(const std::string& path, const NeighborhoodGraph& graph, int k, Metric metric) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot open '" + path + "' for writing");
  out.precision(17);
  out << "dcc-graph 1\n";
  out << "n " << graph.n_nodes << " k " << k << " metric " << to_string(metric) << '\n';
  for (const auto& e : graph.edges)
    out << e.i << ' ' << e.j << ' ' << e.distance << ' ' << e.weight << '\n';
  if (!out) throw Error("io-error", "failed to write '" + path + "'");
}

NeighborhoodGraph load_graph(const std::string& path, int* k, Metric* metric) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot open '" + path + "' for reading");
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "dcc-graph" || version != 1)
    throw Error("version-mismatch", "'" + path + "' is not a dcc-graph v1 file");
  std::string n_key, k_key, metric_key, metric_name;
  int n = 0, file_k = 0;
  in >> n_key >> n >> k_key >> file_k >> metric_key >> metric_name;
  if (!in || n_key != "n" || k_key != "k" || metric_key != "metric")
    throw Error("parse-error", "malformed dcc-graph header in '" + path + "'");
  if (k) *k = file_k;
  if (metric) *metric = metric_from_string(metric_name);

  NeighborhoodGraph graph;
  graph.n_nodes = n;
  GraphEdge e{};
  while (in >> e.i >> e.j >> e.distance >> e.weight) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n || e.i == e.j)
      throw Error("parse-error", "edge endpoints out of range in '" + path + "'");
    graph.edges.push_back(e);
  }
  if (!in.eof()) throw Error("parse-error", "malformed edge line in '" + path + "'");
  graph.degrees.assign(n, 0);
  for (const auto& edge : graph.edges) {
    ++graph.degrees[edge.i];
    ++graph.degrees[edge.j];
  }
  graph.mean_degree = 2.0 * static_cast<double>(graph.edges.size()) / std::max(1, n);
  return graph;
}

}  // namespace dcc
