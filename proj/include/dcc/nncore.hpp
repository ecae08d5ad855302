#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "dcc/types.hpp"

namespace dcc {

struct LayerParams {
  Matrix weight;  // out x in
  Vector bias;    // out

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }
};

/// Fully-connected autoencoder. The decoder mirrors the encoder widths, the
/// code layer and the reconstruction layer are linear, every other affine
/// projection is followed by a ReLU.
struct AutoencoderParams {
  std::vector<LayerParams> encoder;
  std::vector<LayerParams> decoder;

  Index input_dim() const { return encoder.front().in_dim(); }
  Index code_dim() const { return encoder.back().out_dim(); }
  std::vector<int> encoder_widths() const;
};

/// Fan-in scaled uniform init, deterministic under `seed`.
/// `encoder_widths` lists D, hidden..., d.
AutoencoderParams make_autoencoder(const std::vector<int>& encoder_widths, std::uint64_t seed);
AutoencoderParams make_identity_autoencoder(int dim);

struct ForwardOptions {
  bool train = false;       // enables dropout
  double dropout_p = 0.0;   // applied to the input of each affine projection
  std::mt19937_64* rng = nullptr;
};

struct LayerTape {
  Matrix input;  // post-dropout input fed to the affine (in x batch)
  Matrix mask;   // inverted-dropout mask, empty when no dropout was applied
  bool relu = false;
};

/// Forward recording. ReLU activity is recovered from the next layer's input
/// (or from `output` for the last layer); entries zeroed by dropout carry a
/// zero backward delta, so the lost sign never matters. Reusing one tape
/// across same-shaped batches avoids reallocation.
struct ActivationTape {
  std::vector<LayerTape> layers;
  Matrix output;  // final post-activation
  Index batch_size = 0;
};

/// Encoder forward pass. `x_batch` holds one datapoint per column (D x B).
/// Returns the code matrix (d x B); fills `tape` when non-null.
Matrix encode(const AutoencoderParams& params, const Matrix& x_batch,
              const ForwardOptions& opts = {}, ActivationTape* tape = nullptr);
Matrix decode(const AutoencoderParams& params, const Matrix& y_batch,
              const ForwardOptions& opts = {}, ActivationTape* tape = nullptr);

/// Forward through an arbitrary stack with explicit per-layer ReLU flags
/// (encode/decode apply the autoencoder rule: ReLU everywhere except the
/// stack's last affine). Used for greedy layer-pair training.
Matrix forward_custom(const std::vector<LayerParams>& stack, const std::vector<char>& relu_flags,
                      const Matrix& input, const ForwardOptions& opts = {},
                      ActivationTape* tape = nullptr);

struct StackGradients {
  std::vector<LayerParams> layers;  // gradient tensors, same shapes as the stack
  Matrix input;                     // gradient w.r.t. the stack input
  std::vector<Matrix> delta;        // per-layer scratch, kept for buffer reuse
};

/// Reverse-mode pass through a recorded forward. `upstream` is dLoss/dOutput
/// with the output's shape.
StackGradients backprop(const std::vector<LayerParams>& stack, const ActivationTape& tape,
                        const Matrix& upstream);

/// As above, writing into `out` so repeated calls reuse its buffers.
void backprop_into(const std::vector<LayerParams>& stack, const ActivationTape& tape,
                   const Matrix& upstream, StackGradients& out);

/// Gradients for the whole autoencoder, shaped like AutoencoderParams.
struct NetGradients {
  std::vector<LayerParams> encoder;
  std::vector<LayerParams> decoder;
};

NetGradients zero_gradients(const AutoencoderParams& params);

// ---------------------------------------------------------------------------
// First-order optimizers

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.99;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Element-wise Adam with bias correction; `step` starts at 1.
void adam_update(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix>& grad,
                 Eigen::Ref<Matrix> m, Eigen::Ref<Matrix> v, long step, const AdamConfig& cfg);

/// Adam state mirroring an autoencoder's parameter tensors.
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<Matrix> m_enc_w, v_enc_w, m_dec_w, v_dec_w;
  std::vector<Matrix> m_enc_b, v_enc_b, m_dec_b, v_dec_b;
};

AdamState make_adam_state(const AutoencoderParams& params, const AdamConfig& cfg);
void adam_step(AdamState& state, AutoencoderParams& params, const NetGradients& grads);

struct SgdMomentumConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double decay_factor = 0.1;
  int decay_period = 80;  // epochs
};

struct SgdMomentumState {
  SgdMomentumConfig cfg;
  std::vector<Matrix> vel_enc_w, vel_dec_w, vel_enc_b, vel_dec_b;
};

SgdMomentumState make_sgd_state(const AutoencoderParams& params, const SgdMomentumConfig& cfg);

/// lr(epoch) = lr * decay_factor^floor(epoch / decay_period)
double sgd_learning_rate(const SgdMomentumConfig& cfg, int epoch);
void sgd_momentum_step(SgdMomentumState& state, AutoencoderParams& params,
                       const NetGradients& grads, int epoch);

/// Central finite differences, (f(x+h e_i) - f(x-h e_i)) / 2h.
Vector numeric_gradient(const std::function<double(const Vector&)>& loss, const Vector& point,
                        double h = 1e-5);

}  // namespace dcc
