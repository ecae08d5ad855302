#pragma once

#include <span>
#include <vector>

#include "dcc/graph.hpp"
#include "dcc/nncore.hpp"
#include "dcc/types.hpp"

namespace dcc {

/// Scaled Geman-McClure estimator, rho(x; mu) = mu x^2 / (mu + x^2).
inline double rho(double x, double mu) {
  const double x2 = x * x;
  return mu * x2 / (mu + x2);
}

/// d rho(||v||; mu) / dv = rho_coeff(||v||^2, mu) * v.
inline double rho_coeff(double sq_norm, double mu) {
  const double denom = mu + sq_norm;
  return 2.0 * mu * mu / (denom * denom);
}

struct RobustParams {
  double mu1 = 1.0;    // scale of rho_1 (data term)
  double mu2 = 1.0;    // scale of rho_2 (pairwise term)
  double lambda = 1.0; // pairwise balance coefficient
};

/// Edge-sampled minibatch: the node set B is every endpoint of the sampled
/// edges; w_i = n_i^B / n_i rebalances datapoints that would otherwise be
/// over-counted across batches.
struct Minibatch {
  std::vector<int> edge_ids;      // indices into graph.edges
  std::vector<int> nodes;         // B, ascending
  std::vector<int> batch_degree;  // n_i^B per node in B
  std::vector<double> node_weight;

  Index size() const { return static_cast<Index>(nodes.size()); }
  /// Position of a node inside `nodes`; -1 if absent.
  int position(int node) const;
};

Minibatch make_minibatch(const NeighborhoodGraph& graph, std::span<const int> edge_ids);

struct LossBreakdown {
  double total = 0.0;
  double recon = 0.0;
  double data = 0.0;
  double pairwise = 0.0;
};

/// One autoencoder round trip for the batch nodes (deterministic, no dropout).
struct BatchForward {
  Matrix x;     // D x |B| inputs, batch-node order
  Matrix y;     // d x |B| codes
  Matrix xhat;  // D x |B| reconstructions
  ActivationTape enc_tape, dec_tape;
};

BatchForward forward_batch(const AutoencoderParams& params, const Matrix& x_cols,
                           const Minibatch& batch);
/// As above into `out`, reusing its buffers across batches.
void forward_batch_into(const AutoencoderParams& params, const Matrix& x_cols,
                        const Minibatch& batch, BatchForward& out);

/// Rebalanced minibatch loss
///   (1/|B|) sum_i w_i (||x_i - g(y_i)||^2 / D + rho1(||z_i - y_i||) / d)
/// + (lambda/|B|) sum_{(i,j)} w_ij rho2(||z_i - z_j||).
LossBreakdown minibatch_loss_terms(const Minibatch& batch, const NeighborhoodGraph& graph,
                                   const BatchForward& fwd, const Matrix& z,
                                   const RobustParams& rp);
double minibatch_loss(const Minibatch& batch, const NeighborhoodGraph& graph,
                      const AutoencoderParams& params, const Matrix& z, const Matrix& x_cols,
                      const RobustParams& rp);

/// Full DCC objective: ||X - G(F(X))||_F^2 / D + sum_i rho1 / d
/// + lambda sum_E w_ij rho2. Equals |B| * minibatch_loss when E_B = E.
double full_objective(const AutoencoderParams& params, const Matrix& z, const Matrix& x_cols,
                      const NeighborhoodGraph& graph, const RobustParams& rp);

/// dL_B/dz_i for i in B (d x |B|, batch-node order). `y_batch` holds codes for
/// the batch nodes; `z` is the full d x N matrix.
Matrix grad_z(const Minibatch& batch, const NeighborhoodGraph& graph, const Matrix& z,
              const Matrix& y_batch, const RobustParams& rp);

/// Gradients w.r.t. all encoder and decoder parameters for the minibatch loss.
NetGradients grad_omega(const Minibatch& batch, const AutoencoderParams& params,
                        const BatchForward& fwd, const Matrix& z, const RobustParams& rp);

/// Workspace variant: gradients land in ws.encoder.layers / ws.decoder.layers.
struct OmegaGradWorkspace {
  StackGradients encoder, decoder;
  Matrix recon_upstream;
};
void grad_omega_ws(const Minibatch& batch, const AutoencoderParams& params,
                   const BatchForward& fwd, const Matrix& z, const RobustParams& rp,
                   OmegaGradWorkspace& ws);

/// dL_B/dz_i into a reusable buffer.
void grad_z_into(const Minibatch& batch, const NeighborhoodGraph& graph, const Matrix& z,
                 const Matrix& y_batch, const RobustParams& rp, Matrix& out);

// ---------------------------------------------------------------------------
// RCC objective (no autoencoder): quadratic data term against a fixed
// embedding, robust pairwise term.
//   (1/|B|) sum_i w_i ||z_i - y_i||^2 / 2 + (lambda / 2|B|) sum w_ij rho2.

LossBreakdown rcc_minibatch_loss(const Minibatch& batch, const NeighborhoodGraph& graph,
                                 const Matrix& z, const Matrix& y_batch, const RobustParams& rp);
Matrix rcc_grad_z(const Minibatch& batch, const NeighborhoodGraph& graph, const Matrix& z,
                  const Matrix& y_batch, const RobustParams& rp);

}  // namespace dcc
