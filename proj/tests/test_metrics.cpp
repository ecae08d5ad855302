#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dcc/metrics.hpp"
#include "support/oracles.hpp"

using namespace dcc;

TEST_CASE("contingency counts") {
  const auto t = contingency({0, 0, 1, 1}, {1, 1, 0, 0});
  REQUIRE(t.counts.rows() == 2);
  REQUIRE(t.counts.cols() == 2);
  CHECK(t.counts(0, 0) == 0);
  CHECK(t.counts(0, 1) == 2);
  CHECK(t.counts(1, 0) == 2);
  CHECK(t.counts(1, 1) == 0);

  const auto diag = contingency({0, 1, 2}, {0, 1, 2});
  CHECK(diag.counts.isApprox(Matrix::Identity(3, 3)));

  const auto single = contingency({4}, {9});
  CHECK(single.counts(0, 0) == 1);

  CHECK_THROWS_AS(contingency({0, 1}, {0}), Error);
}

TEST_CASE("entropy of marginals") {
  CHECK(entropy(contingency({0, 0, 0}, {0, 1, 2}), TableAxis::Rows) == 0.0);
  CHECK(entropy(contingency({0, 0, 1, 1}, {0, 0, 0, 0}), TableAxis::Rows) ==
        doctest::Approx(std::log(2.0)));
  // marginals [1, 3]
  const auto t = contingency({0, 1, 1, 1}, {0, 0, 0, 0});
  CHECK(entropy(t, TableAxis::Rows) == doctest::Approx(0.562335).epsilon(1e-5));
}

TEST_CASE("mutual information basics") {
  CHECK(mutual_information(contingency({0, 0, 1, 1}, {0, 1, 0, 1})) == doctest::Approx(0.0));
  CHECK(mutual_information(contingency({0, 0, 1, 1}, {0, 0, 1, 1})) ==
        doctest::Approx(std::log(2.0)));
}

TEST_CASE("MI and E[MI] bounded by marginal entropies on random tables") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = test::random_labels(24, 4, rng);
    const auto c_hat = test::random_labels(24, 3, rng);
    const auto t = contingency(c, c_hat);
    const double cap = std::min(entropy(t, TableAxis::Rows), entropy(t, TableAxis::Cols));
    CHECK(mutual_information(t) <= cap + 1e-12);
    CHECK(expected_mi(t) <= cap + 1e-12);
    CHECK(expected_mi(t) >= -1e-12);
  }
}

TEST_CASE("expected MI matches Monte-Carlo permutations") {
  const std::vector<int> c{0, 0, 1, 1};
  const std::vector<int> c_hat{0, 1, 0, 1};
  const double exact = expected_mi(contingency(c, c_hat));
  const auto mc = test::monte_carlo_expected_mi(c, c_hat, 200000, 5);
  CHECK(std::abs(exact - mc.mean) <= 3.0 * mc.stderr_);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = test::random_labels(30, 4, rng);
    const auto b = test::random_labels(30, 5, rng);
    const double e = expected_mi(contingency(a, b));
    const auto est = test::monte_carlo_expected_mi(a, b, 100000, 100 + trial);
    CHECK(std::abs(e - est.mean) <= 3.0 * est.stderr_);
  }
}

TEST_CASE("expected MI of a trivial table is zero") {
  CHECK(expected_mi(contingency({0, 0, 0}, {0, 0, 0})) == 0.0);
}

TEST_CASE("ami identity, invariance, and degenerate cases") {
  const std::vector<int> c{0, 0, 1, 1, 2, 2};
  CHECK(ami(c, c) == doctest::Approx(1.0));

  // relabeling either side leaves the score unchanged
  const std::vector<int> c_hat{1, 1, 0, 2, 2, 0};
  const std::vector<int> relabeled{2, 2, 1, 0, 0, 1};  // permutation of c_hat's codes
  CHECK(ami(c, c_hat) == doctest::Approx(ami(c, relabeled)));

  // both partitions trivial
  CHECK(ami({0, 0, 0}, {5, 5, 5}) == 1.0);
  CHECK(ami({0, 0, 0}, {0, 1, 2}) == 0.0);
}

TEST_CASE("random labelings score near zero ami") {
  std::mt19937_64 rng(23);
  double total = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const auto a = test::random_labels(400, 5, rng);
    const auto b = test::random_labels(400, 5, rng);
    total += ami(a, b);
  }
  CHECK(std::abs(total / trials) < 0.02);
}

TEST_CASE("nmi basics and relation to ami") {
  const std::vector<int> c{0, 0, 1, 1};
  CHECK(nmi(c, c) == doctest::Approx(1.0));
  CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0));

  std::mt19937_64 rng(31);
  for (int t = 0; t < 30; ++t) {
    const auto a = test::random_labels(40, 4, rng);
    const auto b = test::random_labels(40, 4, rng);
    CHECK(nmi(a, b) >= ami(a, b) - 1e-9);
  }
}

TEST_CASE("acc equals exhaustive permutation search") {
  CHECK(acc({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(acc({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.5));

  std::mt19937_64 rng(41);
  for (int t = 0; t < 60; ++t) {
    std::uniform_int_distribution<int> k_dist(1, 6);
    std::uniform_int_distribution<int> n_dist(4, 30);
    const int n = n_dist(rng);
    const auto truth = test::random_labels(n, k_dist(rng), rng);
    const auto pred = test::random_labels(n, k_dist(rng), rng);
    CHECK(acc(truth, pred) == doctest::Approx(test::exhaustive_acc(truth, pred)));
  }
}

TEST_CASE("acc is invariant to relabeling and bounded") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 20; ++t) {
    const auto truth = test::random_labels(25, 4, rng);
    auto pred = test::random_labels(25, 4, rng);
    const double base = acc(truth, pred);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    for (auto& v : pred) v = (v + 2) % 4;  // relabel
    CHECK(acc(truth, pred) == doctest::Approx(base));
  }
}

TEST_CASE("hungarian assignment solves a known instance") {
  Matrix cost(3, 3);
  cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto assign = hungarian_assignment(cost);
  double total = 0.0;
  for (int r = 0; r < 3; ++r) total += cost(r, assign[r]);
  CHECK(total == doctest::Approx(5.0));  // 1 + 2 + 2
}
