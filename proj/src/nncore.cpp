#include "dcc/nncore.hpp"

#include <cmath>
#include <sstream>

namespace dcc {

namespace {

void check_shapes_chain(const std::vector<LayerParams>& stack, const char* what) {
  for (std::size_t l = 0; l < stack.size(); ++l) {
    if (stack[l].bias.size() != stack[l].weight.rows())
      throw Error("shape-mismatch", std::string(what) + ": bias/weight rows disagree");
    if (l > 0 && stack[l].in_dim() != stack[l - 1].out_dim())
      throw Error("shape-mismatch", std::string(what) + ": layer widths do not chain");
  }
}

LayerParams init_layer(Index out, Index in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  LayerParams layer;
  layer.weight = Matrix::NullaryExpr(out, in, [&]() { return dist(rng); });
  layer.bias = Vector::Zero(out);
  return layer;
}

// Computes straight into the tape's buffers; with a persistent tape and
// same-shaped batches no step of the loop reallocates.
Matrix forward_impl(const std::vector<LayerParams>& stack, const std::vector<char>& relu_flags,
                    const Matrix& input, const ForwardOptions& opts, ActivationTape* tape) {
  if (stack.empty()) throw Error("shape-mismatch", "empty layer stack");
  if (relu_flags.size() != stack.size())
    throw Error("shape-mismatch", "relu flag count does not match the stack");
  if (input.rows() != stack.front().in_dim()) {
    std::ostringstream msg;
    msg << "input has " << input.rows() << " rows, stack expects " << stack.front().in_dim();
    throw Error("shape-mismatch", msg.str());
  }
  const bool dropout = opts.train && opts.dropout_p > 0.0;
  if (dropout && opts.rng == nullptr)
    throw Error("config-error", "train-mode dropout requires an RNG");
  if (opts.dropout_p < 0.0 || opts.dropout_p >= 1.0)
    throw Error("config-error", "dropout probability must be in [0, 1)");

  ActivationTape local;
  ActivationTape& t = tape ? *tape : local;
  t.layers.resize(stack.size());
  t.batch_size = input.cols();

  for (std::size_t l = 0; l < stack.size(); ++l) {
    LayerTape& entry = t.layers[l];
    entry.relu = relu_flags[l] != 0;
    if (l == 0) entry.input = input;
    if (dropout) {
      const double keep = 1.0 - opts.dropout_p;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      entry.mask = Matrix::NullaryExpr(entry.input.rows(), entry.input.cols(), [&]() {
        return unit(*opts.rng) < keep ? 1.0 / keep : 0.0;
      });
      entry.input = entry.input.cwiseProduct(entry.mask);
    } else {
      entry.mask.resize(0, 0);
    }
    Matrix& next = l + 1 < stack.size() ? t.layers[l + 1].input : t.output;
    next.noalias() = stack[l].weight * entry.input;
    next.colwise() += stack[l].bias;
    if (entry.relu) next = next.cwiseMax(0.0);
  }
  return t.output;
}

// ReLU after every affine projection except the last one of the stack (the
// code layer and the reconstruction layer stay linear).
std::vector<char> default_relu_flags(std::size_t depth) {
  std::vector<char> flags(depth, 1);
  if (!flags.empty()) flags.back() = 0;
  return flags;
}

}  // namespace

std::vector<int> AutoencoderParams::encoder_widths() const {
  std::vector<int> widths;
  widths.reserve(encoder.size() + 1);
  widths.push_back(static_cast<int>(encoder.front().in_dim()));
  for (const auto& layer : encoder) widths.push_back(static_cast<int>(layer.out_dim()));
  return widths;
}

AutoencoderParams make_autoencoder(const std::vector<int>& encoder_widths, std::uint64_t seed) {
  if (encoder_widths.size() < 2)
    throw Error("config-error", "architecture needs at least input and code widths");
  auto rng = make_rng(seed, rng_stream::kWeightInit);
  AutoencoderParams params;
  for (std::size_t l = 0; l + 1 < encoder_widths.size(); ++l)
    params.encoder.push_back(init_layer(encoder_widths[l + 1], encoder_widths[l], rng));
  for (std::size_t l = encoder_widths.size() - 1; l > 0; --l)
    params.decoder.push_back(init_layer(encoder_widths[l - 1], encoder_widths[l], rng));
  return params;
}

AutoencoderParams make_identity_autoencoder(int dim) {
  AutoencoderParams params;
  LayerParams id{Matrix::Identity(dim, dim), Vector::Zero(dim)};
  params.encoder.push_back(id);
  params.decoder.push_back(std::move(id));
  return params;
}

Matrix encode(const AutoencoderParams& params, const Matrix& x_batch, const ForwardOptions& opts,
              ActivationTape* tape) {
  check_shapes_chain(params.encoder, "encoder");
  return forward_impl(params.encoder, default_relu_flags(params.encoder.size()), x_batch, opts,
                      tape);
}

Matrix decode(const AutoencoderParams& params, const Matrix& y_batch, const ForwardOptions& opts,
              ActivationTape* tape) {
  check_shapes_chain(params.decoder, "decoder");
  return forward_impl(params.decoder, default_relu_flags(params.decoder.size()), y_batch, opts,
                      tape);
}

Matrix forward_custom(const std::vector<LayerParams>& stack, const std::vector<char>& relu_flags,
                      const Matrix& input, const ForwardOptions& opts, ActivationTape* tape) {
  check_shapes_chain(stack, "stack");
  return forward_impl(stack, relu_flags, input, opts, tape);
}

void backprop_into(const std::vector<LayerParams>& stack, const ActivationTape& tape,
                   const Matrix& upstream, StackGradients& out) {
  if (tape.layers.size() != stack.size())
    throw Error("tape-mismatch", "tape depth does not match the layer stack");
  if (upstream.rows() != stack.back().out_dim() || upstream.cols() != tape.batch_size)
    throw Error("tape-mismatch", "upstream gradient shape does not match the recorded forward");

  out.layers.resize(stack.size());
  out.delta.resize(stack.size());
  const Matrix* delta = &upstream;
  for (std::size_t l = stack.size(); l-- > 0;) {
    const LayerTape& t = tape.layers[l];
    if (t.input.rows() != stack[l].in_dim() || t.input.cols() != tape.batch_size)
      throw Error("tape-mismatch", "tape entry shape does not match the layer");
    Matrix& d = out.delta[l];
    if (t.relu) {
      // post-activations live in the next layer's input (or the output)
      const Matrix& post = l + 1 < stack.size() ? tape.layers[l + 1].input : tape.output;
      d = delta->cwiseProduct((post.array() > 0.0).cast<double>().matrix());
    } else if (delta != &d) {
      d = *delta;
    }
    out.layers[l].weight.noalias() = d * t.input.transpose();
    out.layers[l].bias = d.rowwise().sum();
    if (l > 0) {
      Matrix& down = out.delta[l - 1];
      down.noalias() = stack[l].weight.transpose() * d;
      if (t.mask.size() > 0) down = down.cwiseProduct(t.mask);
      delta = &down;
    } else {
      out.input.noalias() = stack[l].weight.transpose() * d;
      if (t.mask.size() > 0) out.input = out.input.cwiseProduct(t.mask);
    }
  }
}

StackGradients backprop(const std::vector<LayerParams>& stack, const ActivationTape& tape,
                        const Matrix& upstream) {
  StackGradients grads;
  backprop_into(stack, tape, upstream, grads);
  return grads;
}

NetGradients zero_gradients(const AutoencoderParams& params) {
  NetGradients g;
  auto zero_like = [](const std::vector<LayerParams>& stack) {
    std::vector<LayerParams> out;
    out.reserve(stack.size());
    for (const auto& layer : stack)
      out.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                     Vector::Zero(layer.bias.size())});
    return out;
  };
  g.encoder = zero_like(params.encoder);
  g.decoder = zero_like(params.decoder);
  return g;
}

// ---------------------------------------------------------------------------

void adam_update(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix>& grad,
                 Eigen::Ref<Matrix> m, Eigen::Ref<Matrix> v, long step, const AdamConfig& cfg) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw Error("shape-mismatch", "adam: parameter/gradient shapes differ");
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double m_corr = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double v_corr = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  param.array() -=
      cfg.lr * (m.array() / m_corr) / ((v.array() / v_corr).sqrt() + cfg.eps);
}

namespace {

std::vector<Matrix> zeros_like_weights(const std::vector<LayerParams>& stack) {
  std::vector<Matrix> out;
  for (const auto& l : stack) out.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
  return out;
}

std::vector<Matrix> zeros_like_biases(const std::vector<LayerParams>& stack) {
  std::vector<Matrix> out;
  for (const auto& l : stack) out.push_back(Matrix::Zero(l.bias.size(), 1));
  return out;
}

}  // namespace

AdamState make_adam_state(const AutoencoderParams& params, const AdamConfig& cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m_enc_w = zeros_like_weights(params.encoder);
  s.v_enc_w = zeros_like_weights(params.encoder);
  s.m_dec_w = zeros_like_weights(params.decoder);
  s.v_dec_w = zeros_like_weights(params.decoder);
  s.m_enc_b = zeros_like_biases(params.encoder);
  s.v_enc_b = zeros_like_biases(params.encoder);
  s.m_dec_b = zeros_like_biases(params.decoder);
  s.v_dec_b = zeros_like_biases(params.decoder);
  return s;
}

void adam_step(AdamState& state, AutoencoderParams& params, const NetGradients& grads) {
  if (grads.encoder.size() != params.encoder.size() ||
      grads.decoder.size() != params.decoder.size())
    throw Error("shape-mismatch", "adam: gradient stack depth differs from parameters");
  ++state.step;
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    adam_update(params.encoder[l].weight, grads.encoder[l].weight, state.m_enc_w[l],
                state.v_enc_w[l], state.step, state.cfg);
    adam_update(params.encoder[l].bias, grads.encoder[l].bias, state.m_enc_b[l], state.v_enc_b[l],
                state.step, state.cfg);
  }
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    adam_update(params.decoder[l].weight, grads.decoder[l].weight, state.m_dec_w[l],
                state.v_dec_w[l], state.step, state.cfg);
    adam_update(params.decoder[l].bias, grads.decoder[l].bias, state.m_dec_b[l], state.v_dec_b[l],
                state.step, state.cfg);
  }
}

SgdMomentumState make_sgd_state(const AutoencoderParams& params, const SgdMomentumConfig& cfg) {
  SgdMomentumState s;
  s.cfg = cfg;
  s.vel_enc_w = zeros_like_weights(params.encoder);
  s.vel_dec_w = zeros_like_weights(params.decoder);
  s.vel_enc_b = zeros_like_biases(params.encoder);
  s.vel_dec_b = zeros_like_biases(params.decoder);
  return s;
}

double sgd_learning_rate(const SgdMomentumConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.decay_factor, epoch / cfg.decay_period);
}

namespace {

void sgd_update(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix>& grad,
                Eigen::Ref<Matrix> vel, double lr, double momentum) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw Error("shape-mismatch", "sgd: parameter/gradient shapes differ");
  vel = momentum * vel - lr * grad;
  param += vel;
}

}  // namespace

void sgd_momentum_step(SgdMomentumState& state, AutoencoderParams& params,
                       const NetGradients& grads, int epoch) {
  const double lr = sgd_learning_rate(state.cfg, epoch);
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    sgd_update(params.encoder[l].weight, grads.encoder[l].weight, state.vel_enc_w[l], lr,
               state.cfg.momentum);
    sgd_update(params.encoder[l].bias, grads.encoder[l].bias, state.vel_enc_b[l], lr,
               state.cfg.momentum);
  }
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    sgd_update(params.decoder[l].weight, grads.decoder[l].weight, state.vel_dec_w[l], lr,
               state.cfg.momentum);
    sgd_update(params.decoder[l].bias, grads.decoder[l].bias, state.vel_dec_b[l], lr,
               state.cfg.momentum);
  }
}

Vector numeric_gradient(const std::function<double(const Vector&)>& loss, const Vector& point,
                        double h) {
  Vector grad(point.size());
  Vector probe = point;
  for (Index i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + h;
    const double up = loss(probe);
    probe[i] = point[i] - h;
    const double down = loss(probe);
    probe[i] = point[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace dcc
