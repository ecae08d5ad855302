#include "dcc/robust.hpp"

#include <algorithm>
#include <cmath>

namespace dcc {

int Minibatch::position(int node) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it == nodes.end() || *it != node) return -1;
  return static_cast<int>(it - nodes.begin());
}

Minibatch make_minibatch(const NeighborhoodGraph& graph, std::span<const int> edge_ids) {
  if (edge_ids.empty()) throw Error("config-error", "a minibatch needs at least one edge");
  Minibatch batch;
  batch.edge_ids.assign(edge_ids.begin(), edge_ids.end());
  std::vector<int> incident;
  incident.reserve(edge_ids.size() * 2);
  for (int id : edge_ids) {
    const auto& e = graph.edges.at(static_cast<std::size_t>(id));
    incident.push_back(e.i);
    incident.push_back(e.j);
  }
  std::sort(incident.begin(), incident.end());

  batch.nodes.reserve(incident.size());
  batch.batch_degree.reserve(incident.size());
  for (std::size_t q = 0; q < incident.size();) {
    std::size_t r = q;
    while (r < incident.size() && incident[r] == incident[q]) ++r;
    batch.nodes.push_back(incident[q]);
    batch.batch_degree.push_back(static_cast<int>(r - q));
    q = r;
  }
  batch.node_weight.resize(batch.nodes.size());
  for (std::size_t q = 0; q < batch.nodes.size(); ++q)
    batch.node_weight[q] =
        static_cast<double>(batch.batch_degree[q]) / graph.degrees[batch.nodes[q]];
  return batch;
}

BatchForward forward_batch(const AutoencoderParams& params, const Matrix& x_cols,
                           const Minibatch& batch) {
  BatchForward fwd;
  fwd.x.resize(x_cols.rows(), batch.size());
  for (Index q = 0; q < batch.size(); ++q) fwd.x.col(q) = x_cols.col(batch.nodes[q]);
  fwd.y = encode(params, fwd.x, {}, &fwd.enc_tape);
  fwd.xhat = decode(params, fwd.y, {}, &fwd.dec_tape);
  return fwd;
}

LossBreakdown minibatch_loss_terms(const Minibatch& batch, const NeighborhoodGraph& graph,
                                   const BatchForward& fwd, const Matrix& z,
                                   const RobustParams& rp) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double dim_in = static_cast<double>(fwd.x.rows());
  const double dim_code = static_cast<double>(fwd.y.rows());

  LossBreakdown out;
  for (Index q = 0; q < batch.size(); ++q) {
    const int i = batch.nodes[q];
    const double w = batch.node_weight[q];
    out.recon += w * (fwd.x.col(q) - fwd.xhat.col(q)).squaredNorm() / dim_in;
    out.data += w * rho((z.col(i) - fwd.y.col(q)).norm(), rp.mu1) / dim_code;
  }
  for (int id : batch.edge_ids) {
    const auto& e = graph.edges[static_cast<std::size_t>(id)];
    out.pairwise += rp.lambda * e.weight * rho((z.col(e.i) - z.col(e.j)).norm(), rp.mu2);
  }
  out.recon *= inv_b;
  out.data *= inv_b;
  out.pairwise *= inv_b;
  out.total = out.recon + out.data + out.pairwise;
  return out;
}

double minibatch_loss(const Minibatch& batch, const NeighborhoodGraph& graph,
                      const AutoencoderParams& params, const Matrix& z, const Matrix& x_cols,
                      const RobustParams& rp) {
  const BatchForward fwd = forward_batch(params, x_cols, batch);
  return minibatch_loss_terms(batch, graph, fwd, z, rp).total;
}

double full_objective(const AutoencoderParams& params, const Matrix& z, const Matrix& x_cols,
                      const NeighborhoodGraph& graph, const RobustParams& rp) {
  if (z.cols() != x_cols.cols()) throw Error("shape-mismatch", "Z and X column counts differ");
  const Matrix y = encode(params, x_cols);
  const Matrix xhat = decode(params, y);
  const double dim_in = static_cast<double>(x_cols.rows());
  const double dim_code = static_cast<double>(y.rows());

  double value = (x_cols - xhat).squaredNorm() / dim_in;
  for (Index i = 0; i < z.cols(); ++i) value += rho((z.col(i) - y.col(i)).norm(), rp.mu1) / dim_code;
  for (const auto& e : graph.edges)
    value += rp.lambda * e.weight * rho((z.col(e.i) - z.col(e.j)).norm(), rp.mu2);
  return value;
}

Matrix grad_z(const Minibatch& batch, const NeighborhoodGraph& graph, const Matrix& z,
              const Matrix& y_batch, const RobustParams& rp) {
  if (y_batch.cols() != batch.size())
    throw Error("shape-mismatch", "y_batch column count does not match the batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double dim_code = static_cast<double>(z.rows());

  Matrix grad = Matrix::Zero(z.rows(), batch.size());
  for (Index q = 0; q < batch.size(); ++q) {
    const int i = batch.nodes[q];
    const Vector diff = z.col(i) - y_batch.col(q);
    grad.col(q) = (batch.node_weight[q] * rho_coeff(diff.squaredNorm(), rp.mu1) / dim_code) * diff;
  }
  for (int id : batch.edge_ids) {
    const auto& e = graph.edges[static_cast<std::size_t>(id)];
    const int qi = batch.position(e.i);
    const int qj = batch.position(e.j);
    const Vector diff = z.col(e.i) - z.col(e.j);
    const Vector term =
        (rp.lambda * e.weight * rho_coeff(diff.squaredNorm(), rp.mu2)) * diff;
    grad.col(qi) += term;
    grad.col(qj) -= term;
  }
  return grad * inv_b;
}

NetGradients grad_omega(const Minibatch& batch, const AutoencoderParams& params,
                        const BatchForward& fwd, const Matrix& z, const RobustParams& rp) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double dim_in = static_cast<double>(fwd.x.rows());
  const double dim_code = static_cast<double>(fwd.y.rows());

  // reconstruction term through the decoder
  Matrix recon_upstream(fwd.x.rows(), batch.size());
  for (Index q = 0; q < batch.size(); ++q)
    recon_upstream.col(q) =
        (2.0 * batch.node_weight[q] * inv_b / dim_in) * (fwd.xhat.col(q) - fwd.x.col(q));
  StackGradients dec = backprop(params.decoder, fwd.dec_tape, recon_upstream);

  // data term plus the decoder's input gradient, through the encoder
  Matrix y_upstream = std::move(dec.input);
  for (Index q = 0; q < batch.size(); ++q) {
    const int i = batch.nodes[q];
    const Vector diff = fwd.y.col(q) - z.col(i);
    y_upstream.col(q) +=
        (batch.node_weight[q] * inv_b * rho_coeff(diff.squaredNorm(), rp.mu1) / dim_code) * diff;
  }
  StackGradients enc = backprop(params.encoder, fwd.enc_tape, y_upstream);

  NetGradients grads;
  grads.encoder = std::move(enc.layers);
  grads.decoder = std::move(dec.layers);
  return grads;
}

// ---------------------------------------------------------------------------

LossBreakdown rcc_minibatch_loss(const Minibatch& batch, const NeighborhoodGraph& graph,
                                 const Matrix& z, const Matrix& y_batch, const RobustParams& rp) {
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossBreakdown out;
  for (Index q = 0; q < batch.size(); ++q) {
    const int i = batch.nodes[q];
    out.data += 0.5 * batch.node_weight[q] * (z.col(i) - y_batch.col(q)).squaredNorm();
  }
  for (int id : batch.edge_ids) {
    const auto& e = graph.edges[static_cast<std::size_t>(id)];
    out.pairwise +=
        0.5 * rp.lambda * e.weight * rho((z.col(e.i) - z.col(e.j)).norm(), rp.mu2);
  }
  out.data *= inv_b;
  out.pairwise *= inv_b;
  out.total = out.data + out.pairwise;
  return out;
}

Matrix rcc_grad_z(const Minibatch& batch, const NeighborhoodGraph& graph, const Matrix& z,
                  const Matrix& y_batch, const RobustParams& rp) {
  if (y_batch.cols() != batch.size())
    throw Error("shape-mismatch", "y_batch column count does not match the batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Matrix grad = Matrix::Zero(z.rows(), batch.size());
  for (Index q = 0; q < batch.size(); ++q) {
    const int i = batch.nodes[q];
    grad.col(q) = batch.node_weight[q] * (z.col(i) - y_batch.col(q));
  }
  for (int id : batch.edge_ids) {
    const auto& e = graph.edges[static_cast<std::size_t>(id)];
    const Vector diff = z.col(e.i) - z.col(e.j);
    const Vector term =
        (0.5 * rp.lambda * e.weight * rho_coeff(diff.squaredNorm(), rp.mu2)) * diff;
    grad.col(batch.position(e.i)) += term;
    grad.col(batch.position(e.j)) -= term;
  }
  return grad * inv_b;
}

}  // namespace dcc
