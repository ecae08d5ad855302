#pragma once

#include <cstdint>
#include <vector>

#include "dcc/nncore.hpp"
#include "dcc/types.hpp"

namespace dcc {

struct PretrainConfig {
  int per_layer_epochs = 200;
  int finetune_epochs = 400;
  int minibatch_size = 256;
  double dropout_p = 0.2;
  double base_lr = 0.1;
  double momentum = 0.9;
  double lr_decay_factor = 0.1;
  int lr_decay_period = 80;
  std::uint64_t seed = 0;

  // The learning rate is scaled with the dataset dimensionality,
  // base_lr * (lr_reference_dim / D) clamped to [lr_min, lr_max].
  bool scale_lr_with_dim = true;
  double lr_reference_dim = 784.0;
  double lr_min = 0.01;
  double lr_max = 0.1;

  double effective_lr(Index data_dim) const;
};

struct SdaeLossRecord {
  int stage;  // 1..L for layer pairs, 0 for finetuning
  int epoch;
  double mse;
};

using SdaeLog = std::vector<SdaeLossRecord>;

/// Greedy layer-pair pretraining, outermost pair first. Each pair is trained
/// to reconstruct the frozen prefix's clean activations from dropout-corrupted
/// inputs under squared error. `x_cols` is D x N.
AutoencoderParams pretrain_layerwise(const Matrix& x_cols, const std::vector<int>& encoder_widths,
                                     const PretrainConfig& cfg, SdaeLog* log = nullptr);

/// End-to-end reconstruction training, no dropout.
AutoencoderParams finetune(AutoencoderParams params, const Matrix& x_cols,
                           const PretrainConfig& cfg, SdaeLog* log = nullptr);

/// pretrain_layerwise followed by finetune.
AutoencoderParams initialize_autoencoder(const Matrix& x_cols,
                                         const std::vector<int>& encoder_widths,
                                         const PretrainConfig& cfg, SdaeLog* log = nullptr);

/// Mean squared error averaged over batch and dimensions.
double reconstruction_mse(const AutoencoderParams& params, const Matrix& x_cols);

}  // namespace dcc
