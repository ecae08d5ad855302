#include "dcc/sdae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dcc {

namespace {

struct StackSgd {
  std::vector<Matrix> vel_w;
  std::vector<Matrix> vel_b;

  explicit StackSgd(const std::vector<LayerParams>& stack) {
    for (const auto& l : stack) {
      vel_w.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
      vel_b.push_back(Matrix::Zero(l.bias.size(), 1));
    }
  }

  void step(std::vector<LayerParams>& stack, const std::vector<LayerParams>& grads, double lr,
            double momentum) {
    for (std::size_t l = 0; l < stack.size(); ++l) {
      vel_w[l] = momentum * vel_w[l] - lr * grads[l].weight;
      stack[l].weight += vel_w[l];
      vel_b[l] = momentum * vel_b[l] - lr * grads[l].bias;
      stack[l].bias += vel_b[l];
    }
  }
};

Matrix gather_columns(const Matrix& data, const std::vector<int>& order, Index begin, Index count) {
  Matrix out(data.rows(), count);
  for (Index q = 0; q < count; ++q) out.col(q) = data.col(order[begin + q]);
  return out;
}

void check_finite_loss(double loss, int stage, int epoch) {
  if (!std::isfinite(loss))
    throw Error("divergence", "non-finite SDAE loss at stage " + std::to_string(stage) +
                                  ", epoch " + std::to_string(epoch));
}

}  // namespace

double PretrainConfig::effective_lr(Index data_dim) const {
  if (!scale_lr_with_dim) return base_lr;
  const double scaled = base_lr * lr_reference_dim / static_cast<double>(data_dim);
  return std::clamp(scaled, lr_min, lr_max);
}

AutoencoderParams pretrain_layerwise(const Matrix& x_cols, const std::vector<int>& encoder_widths,
                                     const PretrainConfig& cfg, SdaeLog* log) {
  if (encoder_widths.size() < 2)
    throw Error("config-error", "architecture needs at least input and code widths");
  if (static_cast<Index>(encoder_widths.front()) != x_cols.rows())
    throw Error("shape-mismatch", "architecture input width does not match the data");

  const int n_pairs = static_cast<int>(encoder_widths.size()) - 1;
  const Index n = x_cols.cols();
  const double lr = cfg.effective_lr(x_cols.rows());
  AutoencoderParams full = make_autoencoder(encoder_widths, cfg.seed);

  Matrix clean = x_cols;  // frozen prefix activations, updated per stage
  for (int stage = 1; stage <= n_pairs; ++stage) {
    const int enc_idx = stage - 1;
    const int dec_idx = n_pairs - stage;
    // Activations follow the full-net convention: the code layer and the
    // final reconstruction layer are linear, everything else is ReLU.
    const char enc_relu = stage < n_pairs ? 1 : 0;
    const char dec_relu = stage > 1 ? 1 : 0;
    std::vector<LayerParams> pair{full.encoder[enc_idx], full.decoder[dec_idx]};
    const std::vector<char> relu_flags{enc_relu, dec_relu};
    StackSgd sgd(pair);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const double dim_out = static_cast<double>(pair.back().out_dim());
    for (int epoch = 0; epoch < cfg.per_layer_epochs; ++epoch) {
      const std::uint64_t tick = static_cast<std::uint64_t>(stage) * 1000000u + epoch;
      auto shuffle_rng = make_rng(cfg.seed, rng_stream::kSdaeShuffle, tick);
      auto dropout_rng = make_rng(cfg.seed, rng_stream::kSdaeDropout, tick);
      std::shuffle(order.begin(), order.end(), shuffle_rng);

      double epoch_loss = 0.0;
      int batches = 0;
      const double epoch_lr = lr * std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_period);
      for (Index begin = 0; begin < n; begin += cfg.minibatch_size) {
        const Index count = std::min<Index>(cfg.minibatch_size, n - begin);
        Matrix target = gather_columns(clean, order, begin, count);

        ActivationTape tape;
        ForwardOptions opts{/*train=*/true, cfg.dropout_p, &dropout_rng};
        Matrix out = forward_custom(pair, relu_flags, target, opts, &tape);

        const double scale = 1.0 / (static_cast<double>(count) * dim_out);
        Matrix diff = out - target;
        const double loss = diff.squaredNorm() * scale;
        check_finite_loss(loss, stage, epoch);
        epoch_loss += loss;
        ++batches;

        StackGradients grads = backprop(pair, tape, (2.0 * scale) * diff);
        sgd.step(pair, grads.layers, epoch_lr, cfg.momentum);
      }
      if (log) log->push_back({stage, epoch, epoch_loss / std::max(1, batches)});
    }

    full.encoder[enc_idx] = pair[0];
    full.decoder[dec_idx] = pair[1];
    // clean activations for the next inner pair
    clean = forward_custom({full.encoder[enc_idx]}, {enc_relu}, clean);
  }
  return full;
}

AutoencoderParams finetune(AutoencoderParams params, const Matrix& x_cols,
                           const PretrainConfig& cfg, SdaeLog* log) {
  const Index n = x_cols.cols();
  const double dim = static_cast<double>(x_cols.rows());
  SgdMomentumConfig sgd_cfg{cfg.effective_lr(x_cols.rows()), cfg.momentum, cfg.lr_decay_factor,
                            cfg.lr_decay_period};
  SgdMomentumState sgd = make_sgd_state(params, sgd_cfg);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
    auto shuffle_rng = make_rng(cfg.seed, rng_stream::kSdaeShuffle, 900000000u + epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    int batches = 0;
    for (Index begin = 0; begin < n; begin += cfg.minibatch_size) {
      const Index count = std::min<Index>(cfg.minibatch_size, n - begin);
      Matrix batch = gather_columns(x_cols, order, begin, count);

      ActivationTape enc_tape, dec_tape;
      Matrix code = encode(params, batch, {}, &enc_tape);
      Matrix out = decode(params, code, {}, &dec_tape);

      const double scale = 1.0 / (static_cast<double>(count) * dim);
      Matrix diff = out - batch;
      const double loss = diff.squaredNorm() * scale;
      check_finite_loss(loss, 0, epoch);
      epoch_loss += loss;
      ++batches;

      StackGradients dec_grads = backprop(params.decoder, dec_tape, (2.0 * scale) * diff);
      StackGradients enc_grads = backprop(params.encoder, enc_tape, dec_grads.input);
      NetGradients grads{std::move(enc_grads.layers), std::move(dec_grads.layers)};
      sgd_momentum_step(sgd, params, grads, epoch);
    }
    if (log) log->push_back({0, epoch, epoch_loss / std::max(1, batches)});
  }
  return params;
}

AutoencoderParams initialize_autoencoder(const Matrix& x_cols,
                                         const std::vector<int>& encoder_widths,
                                         const PretrainConfig& cfg, SdaeLog* log) {
  AutoencoderParams params = pretrain_layerwise(x_cols, encoder_widths, cfg, log);
  return finetune(std::move(params), x_cols, cfg, log);
}

double reconstruction_mse(const AutoencoderParams& params, const Matrix& x_cols) {
  const Matrix out = decode(params, encode(params, x_cols));
  return (out - x_cols).squaredNorm() /
         (static_cast<double>(x_cols.rows()) * static_cast<double>(x_cols.cols()));
}

}  // namespace dcc
