#pragma once

#include <string>

#include "dcc/dccopt.hpp"
#include "dcc/nncore.hpp"

namespace dcc {

/// Binary checkpoint: either a pretrained autoencoder alone or a full training
/// state. Round trips are bit-exact; truncated or foreign files raise
/// version/parse errors without returning partial state.

void save_pretrained(const std::string& path, const AutoencoderParams& params);
AutoencoderParams load_pretrained(const std::string& path);

void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

/// True when the file holds a full TrainState rather than a bare autoencoder.
bool checkpoint_has_state(const std::string& path);

}  // namespace dcc
