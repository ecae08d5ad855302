#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dcc/sdae.hpp"
#include "support/oracles.hpp"

using namespace dcc;

namespace {

// rank-limited data: random factors through a random basis, normalized to [0,1]
Matrix low_rank_data(Index dim, Index n, Index rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix basis = Matrix::NullaryExpr(dim, rank, [&]() { return dist(rng); });
  Matrix factors = Matrix::NullaryExpr(rank, n, [&]() { return dist(rng); });
  Matrix x = basis * factors;
  for (Index r = 0; r < x.rows(); ++r) {
    const double lo = x.row(r).minCoeff(), hi = x.row(r).maxCoeff();
    x.row(r) = (x.row(r).array() - lo) / (hi - lo);
  }
  return x;
}

PretrainConfig quick_config(std::uint64_t seed) {
  PretrainConfig cfg;
  cfg.per_layer_epochs = 30;
  cfg.finetune_epochs = 40;
  cfg.minibatch_size = 32;
  cfg.dropout_p = 0.1;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("learning rate dimensionality scaling") {
  PretrainConfig cfg;
  CHECK(cfg.effective_lr(784) == doctest::Approx(0.1));
  CHECK(cfg.effective_lr(50) == doctest::Approx(0.1));     // clamped above
  CHECK(cfg.effective_lr(2000) == doctest::Approx(0.0392));
  CHECK(cfg.effective_lr(100000) == doctest::Approx(0.01));  // clamped below
  cfg.scale_lr_with_dim = false;
  CHECK(cfg.effective_lr(100000) == doctest::Approx(0.1));
}

TEST_CASE("single-pair architecture reduces pretraining loss") {
  const Matrix x = low_rank_data(6, 128, 2, 3);
  PretrainConfig cfg = quick_config(5);
  cfg.dropout_p = 0.0;
  SdaeLog log;
  pretrain_layerwise(x, {6, 3}, cfg, &log);
  REQUIRE(!log.empty());
  // one stage only (D-d-D), every record belongs to it
  for (const auto& rec : log) CHECK(rec.stage == 1);
  CHECK(log.back().mse < log.front().mse);
}

TEST_CASE("multi-pair pretraining reduces loss in every stage") {
  const Matrix x = low_rank_data(8, 160, 3, 7);
  PretrainConfig cfg = quick_config(9);
  cfg.dropout_p = 0.0;
  SdaeLog log;
  pretrain_layerwise(x, {8, 10, 3}, cfg, &log);
  for (int stage = 1; stage <= 2; ++stage) {
    double first = -1.0, last = -1.0;
    for (const auto& rec : log) {
      if (rec.stage != stage) continue;
      if (first < 0.0) first = rec.mse;
      last = rec.mse;
    }
    REQUIRE(first >= 0.0);
    CHECK(last < first);
  }
}

TEST_CASE("pretraining is bit-deterministic under the seed") {
  const Matrix x = low_rank_data(7, 96, 2, 11);
  PretrainConfig cfg = quick_config(13);
  const AutoencoderParams a = pretrain_layerwise(x, {7, 6, 2}, cfg);
  const AutoencoderParams b = pretrain_layerwise(x, {7, 6, 2}, cfg);
  const Vector pa = test::pack_params(a);
  const Vector pb = test::pack_params(b);
  CHECK((pa.array() == pb.array()).all());
}

TEST_CASE("zero finetune epochs is a no-op") {
  const Matrix x = low_rank_data(6, 64, 2, 17);
  PretrainConfig cfg = quick_config(19);
  cfg.finetune_epochs = 0;
  const AutoencoderParams before = pretrain_layerwise(x, {6, 2}, cfg);
  const AutoencoderParams after = finetune(before, x, cfg);
  CHECK((test::pack_params(before).array() == test::pack_params(after).array()).all());
}

TEST_CASE("finetuning does not worsen reconstruction") {
  const Matrix x = low_rank_data(10, 200, 3, 23);
  PretrainConfig cfg = quick_config(29);
  const AutoencoderParams pre = pretrain_layerwise(x, {10, 8, 3}, cfg);
  const double before = reconstruction_mse(pre, x);
  cfg.dropout_p = 0.0;
  const AutoencoderParams post = finetune(pre, x, cfg);
  CHECK(reconstruction_mse(post, x) <= before + 1e-9);
}

TEST_CASE("full initialization reaches near-zero error on rank-limited data") {
  const Index rank = 2;
  const Matrix x = low_rank_data(8, 256, rank, 31);
  PretrainConfig cfg;
  cfg.per_layer_epochs = 120;
  cfg.finetune_epochs = 250;
  cfg.minibatch_size = 64;
  cfg.dropout_p = 0.05;
  cfg.seed = 37;
  const AutoencoderParams params = initialize_autoencoder(x, {8, 16, 2}, cfg);
  CHECK(reconstruction_mse(params, x) < 1e-3);
}

TEST_CASE("architecture mismatch and divergence are reported") {
  const Matrix x = low_rank_data(5, 32, 2, 41);
  PretrainConfig cfg = quick_config(43);
  CHECK_THROWS_AS(pretrain_layerwise(x, {6, 2}, cfg), Error);

  cfg.base_lr = 1e6;  // blows up immediately
  cfg.scale_lr_with_dim = false;
  cfg.lr_max = 1e6;
  try {
    pretrain_layerwise(x, {5, 4, 2}, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.tag() == "divergence");
  }
}
