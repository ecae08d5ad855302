#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <random>

#include "dcc/graph.hpp"
#include "support/synth.hpp"

using namespace dcc;

namespace {

Matrix random_points(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  return Matrix::NullaryExpr(n, d, [&]() { return dist(rng); });
}

}  // namespace

TEST_CASE("cosine knn with ties broken by lower index") {
  Matrix pts(3, 2);
  pts << 1, 0, 2, 0, 0, 1;
  const auto lists = cosine_knn(pts, 1);
  CHECK(lists[0][0].index == 1);
  CHECK(lists[0][0].distance == doctest::Approx(0.0));
  CHECK(lists[1][0].index == 0);
  // point 2 is equidistant from 0 and 1; the tie goes to index 0
  CHECK(lists[2][0].index == 0);
  CHECK(lists[2][0].distance == doctest::Approx(1.0));
}

TEST_CASE("knn rejects bad inputs") {
  Matrix pts(3, 2);
  pts << 1, 0, 0, 0, 0, 1;
  CHECK_THROWS_AS(cosine_knn(pts, 1), Error);  // zero row
  Matrix ok(3, 2);
  ok << 1, 0, 1, 1, 0, 1;
  CHECK_THROWS_AS(cosine_knn(ok, 3), Error);  // k >= N
  CHECK_THROWS_AS(cosine_knn(ok, 0), Error);
}

TEST_CASE("duplicated rows still get distinct neighbors") {
  Matrix pts(4, 2);
  pts << 1, 1, 1, 1, 1, 1, 5, 0;
  const auto lists = knn_neighbors(pts, 2, Metric::Euclidean);
  for (int i = 0; i < 4; ++i) {
    CHECK(lists[i].size() == 2);
    for (const auto& e : lists[i]) CHECK(e.index != i);
  }
  CHECK(lists[0][0].index == 1);
  CHECK(lists[0][0].distance == doctest::Approx(0.0));
}

TEST_CASE("k = N-1 yields all other indices") {
  const Matrix pts = random_points(6, 3, 2).array() + 2.0;  // keep away from zero rows
  const auto lists = cosine_knn(pts, 5);
  for (int i = 0; i < 6; ++i) {
    CHECK(lists[i].size() == 5);
    std::vector<int> seen;
    for (const auto& e : lists[i]) seen.push_back(e.index);
    std::sort(seen.begin(), seen.end());
    int expect = 0;
    for (int s : seen) {
      if (expect == i) ++expect;
      CHECK(s == expect++);
    }
  }
}

TEST_CASE("mutual knn on a line, then MST augmentation") {
  // points on a line at 0, 1, 3 with k = 1 under the euclidean metric
  Matrix pts(3, 1);
  pts << 0, 1, 3;
  const auto lists = knn_neighbors(pts, 1, Metric::Euclidean);
  const auto mutual = mutual_knn_edges(lists);
  REQUIRE(mutual.size() == 1);
  CHECK(mutual[0].i == 0);
  CHECK(mutual[0].j == 1);

  const auto augmented = mst_augment(mutual, lists, pts, Metric::Euclidean);
  REQUIRE(augmented.size() == 2);
  CHECK(augmented[0].i == 0);
  CHECK(augmented[0].j == 1);
  CHECK(augmented[1].i == 1);
  CHECK(augmented[1].j == 2);
  CHECK(count_components(3, augmented) == 1);
}

TEST_CASE("k = N-1 makes the mutual graph complete") {
  const Matrix pts = random_points(7, 2, 3).array() + 3.0;
  const auto lists = cosine_knn(pts, 6);
  const auto mutual = mutual_knn_edges(lists);
  CHECK(mutual.size() == 7 * 6 / 2);
}

TEST_CASE("mutual edges are a subset of the symmetrized knn edges") {
  std::mt19937_64 seeds(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix pts = random_points(30, 4, seeds()).array() + 4.0;
    const auto lists = cosine_knn(pts, 4);
    const auto mutual = mutual_knn_edges(lists);
    for (const auto& e : mutual) {
      auto in_list = [&](int a, int b) {
        for (const auto& entry : lists[a])
          if (entry.index == b) return true;
        return false;
      };
      CHECK(in_list(e.i, e.j));
      CHECK(in_list(e.j, e.i));
    }
  }
}

TEST_CASE("mst augmentation connects 100 random datasets") {
  std::mt19937_64 seeds(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> n_dist(5, 60);
    const int n = n_dist(seeds);
    const Matrix pts = random_points(n, 3, seeds());
    const auto lists = knn_neighbors(pts, std::min(3, n - 1), Metric::Euclidean);
    const auto edges = mst_augment(mutual_knn_edges(lists), lists, pts, Metric::Euclidean);
    CHECK(count_components(n, edges) == 1);
  }
}

TEST_CASE("bridging repairs a disconnected knn graph") {
  // two tight pairs far apart; k=1 gives two mutual components
  Matrix pts(4, 1);
  pts << 0.0, 0.1, 100.0, 100.1;
  const auto lists = knn_neighbors(pts, 1, Metric::Euclidean);
  const auto edges = mst_augment(mutual_knn_edges(lists), lists, pts, Metric::Euclidean);
  CHECK(count_components(4, edges) == 1);
  // the bridge is the globally shortest inter-component pair (1,2)
  bool has_bridge = false;
  for (const auto& e : edges) has_bridge |= (e.i == 1 && e.j == 2);
  CHECK(has_bridge);
}

TEST_CASE("two points always form a single edge") {
  Matrix pts(2, 2);
  pts << 1, 0, 0, 1;
  const auto g = build_graph(pts, 1, Metric::Cosine);
  REQUIRE(g.n_edges() == 1);
  CHECK(g.edges[0].i == 0);
  CHECK(g.edges[0].j == 1);
}

TEST_CASE("weights on regular, path, and star graphs") {
  // any regular graph: all weights 1 (complete graph on 4 nodes)
  const Matrix pts = random_points(4, 3, 11).array() + 4.0;
  auto g = build_graph(pts, 3, Metric::Cosine);
  for (const auto& e : g.edges) CHECK(e.weight == doctest::Approx(1.0).epsilon(1e-12));

  // path on 3 nodes: degrees 1,2,1; w = (4/3)/sqrt(2)
  NeighborhoodGraph path;
  path.n_nodes = 3;
  path.edges = {{0, 1, 1.0, 0.0}, {1, 2, 1.0, 0.0}};
  compute_weights(path);
  for (const auto& e : path.edges)
    CHECK(e.weight == doctest::Approx((4.0 / 3.0) / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(path.degrees[1] == 2);

  // star K_{1,3}: degrees 3,1,1,1; w = 1.5/sqrt(3)
  NeighborhoodGraph star;
  star.n_nodes = 4;
  star.edges = {{0, 1, 1.0, 0.0}, {0, 2, 1.0, 0.0}, {0, 3, 1.0, 0.0}};
  compute_weights(star);
  for (const auto& e : star.edges)
    CHECK(e.weight == doctest::Approx(1.5 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("degree sum equals twice the edge count") {
  const Matrix pts = random_points(50, 4, 13);
  const auto g = build_graph(pts, 5, Metric::Euclidean);
  long total = 0;
  for (int d : g.degrees) {
    total += d;
    CHECK(d >= 1);
  }
  CHECK(total == 2 * g.n_edges());
}

TEST_CASE("spectral norm basics") {
  CHECK(spectral_norm_dense(Matrix::Identity(5, 5)) == doctest::Approx(1.0));
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 3.0;
  diag(1, 1) = 1.0;
  CHECK(spectral_norm_dense(diag) == doctest::Approx(3.0));
}

TEST_CASE("power iteration matches a dense eigensolver") {
  std::mt19937_64 seeds(17);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix m = random_points(20, 20, seeds());
    Matrix sym = m * m.transpose();  // PSD
    PowerIterationInfo info;
    const double estimate = spectral_norm_dense(sym, &info);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    const double exact = eig.eigenvalues().maxCoeff();
    // the iteration cap may stop short of the residual tolerance; the value
    // must still match the oracle
    CHECK(std::abs(estimate - exact) <= 1e-6 * std::max(1.0, exact));
  }
}

TEST_CASE("spectral norm is absolutely homogeneous") {
  std::mt19937_64 seeds(19);
  Matrix m = random_points(12, 12, seeds());
  Matrix sym = (m + m.transpose()) * 0.5;
  sym = sym * sym;  // PSD
  const double base = spectral_norm_dense(sym);
  for (double c : {2.0, 0.5, 7.25}) {
    CHECK(spectral_norm_dense(c * sym) ==
          doctest::Approx(c * base).epsilon(1e-9));
  }
}

TEST_CASE("laplacian norm and lambda on a single edge") {
  NeighborhoodGraph g;
  g.n_nodes = 2;
  g.edges = {{0, 1, 0.1, 1.0}};
  g.degrees = {1, 1};
  g.mean_degree = 1.0;
  CHECK(laplacian_spectral_norm(g) == doctest::Approx(2.0));

  Matrix y = Matrix::Identity(2, 2);  // columns e1, e2
  CHECK(embedding_spectral_norm(y) == doctest::Approx(1.0));
  CHECK(compute_lambda(y, g) == doctest::Approx(0.5));

  // scaling Y scales lambda
  CHECK(compute_lambda(3.0 * y, g) == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("laplacian norm bounded by twice the max weighted degree") {
  const Matrix pts = random_points(40, 3, 23);
  auto g = build_graph(pts, 4, Metric::Euclidean);
  double max_wdeg = 0.0;
  std::vector<double> wdeg(g.n_nodes, 0.0);
  for (const auto& e : g.edges) {
    wdeg[e.i] += e.weight;
    wdeg[e.j] += e.weight;
  }
  for (double w : wdeg) max_wdeg = std::max(max_wdeg, w);
  CHECK(laplacian_spectral_norm(g) <= 2.0 * max_wdeg + 1e-9);
}

TEST_CASE("delta1: centroid distances") {
  Matrix same = Matrix::Ones(3, 5);
  CHECK(compute_delta1(same) == 0.0);

  Matrix two(1, 2);
  two << 0.0, 2.0;
  CHECK(compute_delta1(two) == doctest::Approx(1.0));

  std::mt19937_64 seeds(29);
  Matrix y = random_points(4, 30, seeds());
  const Vector centroid = y.rowwise().mean();
  double brute = 0.0;
  for (Index i = 0; i < y.cols(); ++i) brute += (y.col(i) - centroid).norm();
  brute /= static_cast<double>(y.cols());
  CHECK(compute_delta1(y) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("delta2: bottom percentile of edge distances") {
  NeighborhoodGraph g;
  g.n_nodes = 51;
  for (int i = 0; i < 50; ++i) g.edges.push_back({i, i + 1, 0.0, 1.0});

  Matrix identical = Matrix::Zero(2, 51);
  CHECK(compute_delta2(identical, g) == 0.0);

  // 50 edges with embedding distances 1..50: floor(0.5) -> max(1, 0) = 1 value
  Matrix y = Matrix::Zero(1, 51);
  double at = 0.0;
  for (int i = 0; i < 51; ++i) {
    y(0, i) = at;
    at += static_cast<double>(i + 1);
  }
  CHECK(compute_delta2(y, g) == doctest::Approx(1.0));

  // 300 edges with distances 1..300: bottom 3, mean 2
  NeighborhoodGraph g2;
  g2.n_nodes = 301;
  for (int i = 0; i < 300; ++i) g2.edges.push_back({i, i + 1, 0.0, 1.0});
  Matrix y2 = Matrix::Zero(1, 301);
  at = 0.0;
  for (int i = 0; i < 301; ++i) {
    y2(0, i) = at;
    at += static_cast<double>(i + 1);
  }
  CHECK(compute_delta2(y2, g2) == doctest::Approx(2.0));
}

TEST_CASE("delta2 is monotone in every edge distance") {
  std::mt19937_64 seeds(31);
  Matrix y = random_points(3, 40, seeds());
  auto g = build_graph(y.transpose(), 4, Metric::Euclidean);
  const double base = compute_delta2(y, g);
  // stretching the embedding can only grow edge distances
  CHECK(compute_delta2(1.5 * y, g) >= base);
}

TEST_CASE("graph persistence round trip") {
  const Matrix pts = random_points(25, 4, 37);
  const auto g = build_graph(pts, 3, Metric::Euclidean);
  const auto path = std::filesystem::temp_directory_path() / "dcc-graph-test.txt";
  save_graph(path.string(), g, 3, Metric::Euclidean);

  int k = 0;
  Metric metric{};
  const auto back = load_graph(path.string(), &k, &metric);
  CHECK(k == 3);
  CHECK(metric == Metric::Euclidean);
  REQUIRE(back.n_edges() == g.n_edges());
  CHECK(back.n_nodes == g.n_nodes);
  for (Index e = 0; e < g.n_edges(); ++e) {
    CHECK(back.edges[e].i == g.edges[e].i);
    CHECK(back.edges[e].j == g.edges[e].j);
    CHECK(back.edges[e].distance == g.edges[e].distance);
    CHECK(back.edges[e].weight == g.edges[e].weight);
  }
  CHECK(back.degrees == g.degrees);

  CHECK_THROWS_AS(load_graph("/nonexistent/graph.txt"), Error);
}
