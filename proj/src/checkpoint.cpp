#include "dcc/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "binio.hpp"

namespace dcc {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'K', '1'};
constexpr std::uint8_t kKindPretrained = 1;
constexpr std::uint8_t kKindTrainState = 2;

void write_layers(std::ostream& os, const std::vector<LayerParams>& stack) {
  detail::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(stack.size()));
  for (const auto& layer : stack) {
    detail::write_tagged_matrix(os, layer.weight);
    detail::write_tagged_matrix(os, layer.bias);
  }
}

std::vector<LayerParams> read_layers(std::istream& is) {
  const auto count = detail::read_raw<std::uint32_t>(is, "layer count");
  std::vector<LayerParams> stack(count);
  for (auto& layer : stack) {
    layer.weight = detail::read_tagged_matrix(is, "layer weight");
    layer.bias = detail::read_tagged_matrix(is, "layer bias");
  }
  return stack;
}

void write_params(std::ostream& os, const AutoencoderParams& params) {
  write_layers(os, params.encoder);
  write_layers(os, params.decoder);
}

AutoencoderParams read_params(std::istream& is) {
  AutoencoderParams params;
  params.encoder = read_layers(is);
  params.decoder = read_layers(is);
  return params;
}

void write_matrix_list(std::ostream& os, const std::vector<Matrix>& list) {
  detail::write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(list.size()));
  for (const auto& m : list) detail::write_tagged_matrix(os, m);
}

std::vector<Matrix> read_matrix_list(std::istream& is, const char* what) {
  const auto count = detail::read_raw<std::uint32_t>(is, what);
  std::vector<Matrix> list(count);
  for (auto& m : list) m = detail::read_tagged_matrix(is, what);
  return list;
}

void write_adam(std::ostream& os, const AdamState& adam) {
  detail::write_raw(os, adam.cfg.lr);
  detail::write_raw(os, adam.cfg.beta1);
  detail::write_raw(os, adam.cfg.beta2);
  detail::write_raw(os, adam.cfg.eps);
  detail::write_raw<std::int64_t>(os, adam.step);
  write_matrix_list(os, adam.m_enc_w);
  write_matrix_list(os, adam.v_enc_w);
  write_matrix_list(os, adam.m_dec_w);
  write_matrix_list(os, adam.v_dec_w);
  write_matrix_list(os, adam.m_enc_b);
  write_matrix_list(os, adam.v_enc_b);
  write_matrix_list(os, adam.m_dec_b);
  write_matrix_list(os, adam.v_dec_b);
}

AdamState read_adam(std::istream& is) {
  AdamState adam;
  adam.cfg.lr = detail::read_raw<double>(is, "adam config");
  adam.cfg.beta1 = detail::read_raw<double>(is, "adam config");
  adam.cfg.beta2 = detail::read_raw<double>(is, "adam config");
  adam.cfg.eps = detail::read_raw<double>(is, "adam config");
  adam.step = detail::read_raw<std::int64_t>(is, "adam step");
  adam.m_enc_w = read_matrix_list(is, "adam moments");
  adam.v_enc_w = read_matrix_list(is, "adam moments");
  adam.m_dec_w = read_matrix_list(is, "adam moments");
  adam.v_dec_w = read_matrix_list(is, "adam moments");
  adam.m_enc_b = read_matrix_list(is, "adam moments");
  adam.v_enc_b = read_matrix_list(is, "adam moments");
  adam.m_dec_b = read_matrix_list(is, "adam moments");
  adam.v_dec_b = read_matrix_list(is, "adam moments");
  return adam;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path, std::uint8_t expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot open '" + path + "' for reading");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("version-mismatch", "'" + path + "' is not a dcc checkpoint (v1)");
  const auto kind = detail::read_raw<std::uint8_t>(in, "checkpoint kind");
  if (kind != expected_kind)
    throw Error("version-mismatch",
                "'" + path + "' holds a different checkpoint kind than requested");
  return in;
}

std::uint8_t peek_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot open '" + path + "' for reading");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("version-mismatch", "'" + path + "' is not a dcc checkpoint (v1)");
  return detail::read_raw<std::uint8_t>(in, "checkpoint kind");
}

}  // namespace

void save_pretrained(const std::string& path, const AutoencoderParams& params) {
  auto out = open_out(path);
  out.write(kMagic, 4);
  detail::write_raw(out, kKindPretrained);
  write_params(out, params);
  if (!out) throw Error("io-error", "failed to write '" + path + "'");
}

AutoencoderParams load_pretrained(const std::string& path) {
  auto in = open_in(path, kKindPretrained);
  return read_params(in);
}

void save_checkpoint(const std::string& path, const TrainState& state) {
  auto out = open_out(path);
  out.write(kMagic, 4);
  detail::write_raw(out, kKindTrainState);
  write_params(out, state.omega);
  detail::write_tagged_matrix(out, state.z);
  detail::write_raw(out, state.rp.mu1);
  detail::write_raw(out, state.rp.mu2);
  detail::write_raw(out, state.rp.lambda);
  detail::write_raw(out, state.delta1);
  detail::write_raw(out, state.delta2);
  detail::write_raw<std::int32_t>(out, state.epoch);
  detail::write_raw<std::int32_t>(out, state.m_period);
  detail::write_raw<std::uint8_t>(out, state.continuation_complete ? 1 : 0);
  detail::write_raw<std::uint64_t>(out, state.seed);
  write_adam(out, state.omega_adam);
  detail::write_raw(out, state.z_adam.cfg.lr);
  detail::write_raw(out, state.z_adam.cfg.beta1);
  detail::write_raw(out, state.z_adam.cfg.beta2);
  detail::write_raw(out, state.z_adam.cfg.eps);
  detail::write_raw<std::int64_t>(out, state.z_adam.step);
  detail::write_tagged_matrix(out, state.z_adam.m);
  detail::write_tagged_matrix(out, state.z_adam.v);
  if (!out) throw Error("io-error", "failed to write '" + path + "'");
}

TrainState load_checkpoint(const std::string& path) {
  auto in = open_in(path, kKindTrainState);
  TrainState state;
  state.omega = read_params(in);
  state.z = detail::read_tagged_matrix(in, "representatives");
  state.rp.mu1 = detail::read_raw<double>(in, "robust params");
  state.rp.mu2 = detail::read_raw<double>(in, "robust params");
  state.rp.lambda = detail::read_raw<double>(in, "robust params");
  state.delta1 = detail::read_raw<double>(in, "thresholds");
  state.delta2 = detail::read_raw<double>(in, "thresholds");
  state.epoch = detail::read_raw<std::int32_t>(in, "epoch");
  state.m_period = detail::read_raw<std::int32_t>(in, "m period");
  state.continuation_complete = detail::read_raw<std::uint8_t>(in, "flags") != 0;
  state.seed = detail::read_raw<std::uint64_t>(in, "seed");
  state.omega_adam = read_adam(in);
  state.z_adam.cfg.lr = detail::read_raw<double>(in, "z adam config");
  state.z_adam.cfg.beta1 = detail::read_raw<double>(in, "z adam config");
  state.z_adam.cfg.beta2 = detail::read_raw<double>(in, "z adam config");
  state.z_adam.cfg.eps = detail::read_raw<double>(in, "z adam config");
  state.z_adam.step = detail::read_raw<std::int64_t>(in, "z adam step");
  state.z_adam.m = detail::read_tagged_matrix(in, "z adam moments");
  state.z_adam.v = detail::read_tagged_matrix(in, "z adam moments");
  return state;
}

bool checkpoint_has_state(const std::string& path) {
  return peek_kind(path) == kKindTrainState;
}

}  // namespace dcc
