#include "dcc/dccopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace dcc {

std::string to_string(Termination t) {
  return t == Termination::EdgeStability ? "edge-stability" : "epoch-cap";
}

std::vector<int> DccConfig::encoder_widths(Index data_dim) const {
  std::vector<int> widths;
  widths.push_back(static_cast<int>(data_dim));
  widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
  widths.push_back(d);
  return widths;
}

namespace {

Matrix gather_columns(const Matrix& data, const std::vector<int>& ids) {
  Matrix out(data.rows(), static_cast<Index>(ids.size()));
  for (std::size_t q = 0; q < ids.size(); ++q) out.col(static_cast<Index>(q)) = data.col(ids[q]);
  return out;
}

double max_center_distance(const Matrix& y) {
  const Vector centroid = y.rowwise().mean();
  double best = 0.0;
  for (Index i = 0; i < y.cols(); ++i) best = std::max(best, (y.col(i) - centroid).norm());
  return best;
}

double max_edge_distance(const Matrix& y, const NeighborhoodGraph& graph) {
  double best = 0.0;
  for (const auto& e : graph.edges)
    best = std::max(best, (y.col(e.i) - y.col(e.j)).norm());
  return best;
}

}  // namespace

TrainState init_state(AutoencoderParams omega, const Matrix& x_cols,
                      const NeighborhoodGraph& graph, const DccConfig& cfg) {
  if (static_cast<int>(x_cols.cols()) != graph.n_nodes)
    throw Error("shape-mismatch", "data and graph node counts differ");
  if (cfg.objective == Objective::Rcc && !cfg.freeze_omega)
    throw Error("config-error", "the RCC objective optimizes Z only; omega must be frozen");

  TrainState state;
  state.seed = cfg.seed;
  state.m_period = cfg.m_period;

  const bool use_net = !omega.encoder.empty();
  Matrix y = use_net ? encode(omega, x_cols) : x_cols;
  if (!y.allFinite()) throw Error("degenerate", "initial embedding contains non-finite values");

  state.delta1 = compute_delta1(y);
  state.delta2 = compute_delta2(y, graph);
  if (!(state.delta1 > 0.0) || !(state.delta2 > 0.0))
    throw Error("degenerate", "all embedded points coincide; delta thresholds are zero");

  state.rp.lambda = cfg.lambda_override ? *cfg.lambda_override : compute_lambda(y, graph);
  state.rp.mu1 = std::max(cfg.mu_init_factor * std::pow(max_center_distance(y), 2.0),
                          state.delta1 / 2.0);
  state.rp.mu2 = std::max(cfg.mu_init_factor * std::pow(max_edge_distance(y, graph), 2.0),
                          state.delta2 / 2.0);

  state.omega = std::move(omega);
  state.z = std::move(y);
  if (use_net) state.omega_adam = make_adam_state(state.omega, cfg.adam);
  state.z_adam.cfg = cfg.adam;
  state.z_adam.m = Matrix::Zero(state.z.rows(), state.z.cols());
  state.z_adam.v = Matrix::Zero(state.z.rows(), state.z.cols());
  return state;
}

EpochSampler::EpochSampler(const NeighborhoodGraph& graph, int edges_per_batch,
                           std::mt19937_64 rng)
    : batch_edges_(edges_per_batch) {
  if (edges_per_batch < 1) throw Error("config-error", "edge batch size must be at least 1");
  permutation_.resize(graph.edges.size());
  std::iota(permutation_.begin(), permutation_.end(), 0);
  std::shuffle(permutation_.begin(), permutation_.end(), rng);
}

Minibatch EpochSampler::next(const NeighborhoodGraph& graph) {
  if (done()) throw Error("config-error", "epoch partition exhausted");
  const Index count = std::min<Index>(batch_edges_, static_cast<Index>(permutation_.size()) - cursor_);
  std::span<const int> slice(permutation_.data() + cursor_, static_cast<std::size_t>(count));
  cursor_ += count;
  return make_minibatch(graph, slice);
}

Index EpochSampler::n_batches() const {
  return (static_cast<Index>(permutation_.size()) + batch_edges_ - 1) / batch_edges_;
}

Minibatch sample_edge_minibatch(const NeighborhoodGraph& graph, int m, std::mt19937_64& rng) {
  EpochSampler sampler(graph, m, rng);
  return sampler.next(graph);
}

LossBreakdown train_minibatch(TrainState& state, const Matrix& x_cols,
                              const NeighborhoodGraph& graph, const DccConfig& cfg,
                              const Minibatch& batch) {
  const bool use_net = !state.omega.encoder.empty();
  LossBreakdown terms;
  Matrix z_grad;
  if (cfg.objective == Objective::Dcc) {
    BatchForward fwd = forward_batch(state.omega, x_cols, batch);
    terms = minibatch_loss_terms(batch, graph, fwd, state.z, state.rp);
    z_grad = grad_z(batch, graph, state.z, fwd.y, state.rp);
    if (!cfg.freeze_omega) {
      NetGradients omega_grads = grad_omega(batch, state.omega, fwd, state.z, state.rp);
      adam_step(state.omega_adam, state.omega, omega_grads);
    }
  } else {
    Matrix y_batch = use_net ? forward_batch(state.omega, x_cols, batch).y
                             : gather_columns(x_cols, batch.nodes);
    terms = rcc_minibatch_loss(batch, graph, state.z, y_batch, state.rp);
    z_grad = rcc_grad_z(batch, graph, state.z, y_batch, state.rp);
  }
  if (!std::isfinite(terms.total))
    throw Error("divergence",
                "non-finite minibatch loss at epoch " + std::to_string(state.epoch + 1) +
                    " (mu1=" + std::to_string(state.rp.mu1) +
                    ", mu2=" + std::to_string(state.rp.mu2) + ")");

  // sparse Adam on the sampled representatives only
  ++state.z_adam.step;
  for (Index q = 0; q < batch.size(); ++q) {
    const int i = batch.nodes[q];
    adam_update(state.z.col(i), z_grad.col(q), state.z_adam.m.col(i), state.z_adam.v.col(i),
                state.z_adam.step, state.z_adam.cfg);
  }
  return terms;
}

EpochRecord train_epoch(TrainState& state, const Matrix& x_cols, const NeighborhoodGraph& graph,
                        const DccConfig& cfg) {
  const int epoch = state.epoch + 1;
  EpochSampler sampler(graph, cfg.edge_batch, make_rng(state.seed, rng_stream::kEdgeShuffle,
                                                       static_cast<std::uint64_t>(epoch)));

  LossBreakdown sum;
  int batches = 0;
  while (!sampler.done()) {
    const Minibatch batch = sampler.next(graph);
    const LossBreakdown terms = train_minibatch(state, x_cols, graph, cfg, batch);
    sum.total += terms.total;
    sum.recon += terms.recon;
    sum.data += terms.data;
    sum.pairwise += terms.pairwise;
    ++batches;
  }

  state.epoch = epoch;
  EpochRecord rec;
  rec.epoch = epoch;
  rec.loss = {sum.total / batches, sum.recon / batches, sum.data / batches,
              sum.pairwise / batches};
  rec.mu1 = state.rp.mu1;
  rec.mu2 = state.rp.mu2;
  return rec;
}

void continuation_step(TrainState& state, const DccConfig& cfg) {
  state.rp.mu1 = std::max(state.rp.mu1 / 2.0, state.delta1 / 2.0);
  state.rp.mu2 = std::max(state.rp.mu2 / 2.0, state.delta2 / 2.0);
  const bool mu1_floored = state.rp.mu1 <= state.delta1 / 2.0;
  const bool mu2_floored = state.rp.mu2 <= state.delta2 / 2.0;
  state.continuation_complete =
      cfg.objective == Objective::Rcc ? mu2_floored : (mu1_floored && mu2_floored);
}

double changed_edge_fraction(const std::vector<int>& labels, const std::vector<int>& prev_labels,
                             const NeighborhoodGraph& graph) {
  if (labels.size() != prev_labels.size())
    throw Error("length-mismatch", "label vectors have different lengths");
  Index changed = 0;
  for (const auto& e : graph.edges) {
    const bool now = labels[e.i] == labels[e.j];
    const bool before = prev_labels[e.i] == prev_labels[e.j];
    if (now != before) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(graph.edges.size());
}

bool check_convergence(double changed_fraction, double threshold) {
  return changed_fraction < threshold;
}

std::vector<int> extract_clusters(const Matrix& z, double delta2, int* num_clusters) {
  if (!(delta2 > 0.0)) throw Error("degenerate", "extraction threshold must be positive");
  const Index n = z.cols();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  // Exact threshold graph over all pairs, streamed in column blocks so no
  // N x N matrix is ever materialized.
  const double threshold_sq = delta2 * delta2;
  const Index block = 512;
  const Vector sq_norms = z.colwise().squaredNorm();
  Matrix cross;
  for (Index a = 0; a < n; a += block) {
    const Index cols = std::min(block, n - a);
    cross.noalias() = z.middleCols(a, cols).transpose() * z;  // cols x n
    for (Index q = 0; q < cols; ++q) {
      const Index i = a + q;
      for (Index j = i + 1; j < n; ++j) {
        const double sq = sq_norms[i] + sq_norms[j] - 2.0 * cross(q, j);
        if (sq < threshold_sq) {
          const int ri = find(static_cast<int>(i));
          const int rj = find(static_cast<int>(j));
          if (ri != rj) parent[rj] = ri;
        }
      }
    }
  }

  std::vector<int> labels(n, -1);
  std::unordered_map<int, int> order;
  for (Index i = 0; i < n; ++i) {
    const int root = find(static_cast<int>(i));
    auto [it, inserted] = order.emplace(root, static_cast<int>(order.size()));
    labels[i] = it->second;
  }
  if (num_clusters) *num_clusters = static_cast<int>(order.size());
  return labels;
}

namespace {

ClusterResult run_driver(const DataMatrix& x, const DccConfig& cfg,
                         const AutoencoderParams* initial_omega, RunLog* log) {
  if (x.n_points() < 2) throw Error("config-error", "clustering needs at least 2 points");
  if (!x.values.allFinite()) throw Error("non-finite-value", "input matrix contains NaN/Inf");

  const NeighborhoodGraph graph = build_graph(x.values, cfg.k, cfg.metric);
  const Matrix x_cols = x.values.transpose();

  AutoencoderParams omega;
  if (initial_omega) {
    omega = *initial_omega;
  } else if (cfg.objective == Objective::Dcc) {
    PretrainConfig sdae_cfg = cfg.sdae;
    sdae_cfg.seed = cfg.seed;
    omega = initialize_autoencoder(x_cols, cfg.encoder_widths(x.n_dims()), sdae_cfg,
                                   log ? &log->sdae : nullptr);
  }  // RCC mode runs without an autoencoder

  TrainState state = init_state(std::move(omega), x_cols, graph, cfg);
  const bool use_net = !state.omega.encoder.empty();

  ClusterResult result;
  result.termination_reason = Termination::EpochCap;
  std::vector<int> labels, prev_labels;
  bool have_labels = false, have_prev = false;

  for (int epoch = 1; epoch <= cfg.epoch_cap; ++epoch) {
    EpochRecord rec = train_epoch(state, x_cols, graph, cfg);
    if (epoch % state.m_period == 0) continuation_step(state, cfg);

    bool stop = false;
    if (state.continuation_complete) {
      int k_now = 0;
      labels = extract_clusters(state.z, state.delta2, &k_now);
      rec.n_clusters = k_now;
      if (have_prev) {
        rec.changed_edge_fraction = changed_edge_fraction(labels, prev_labels, graph);
        stop = check_convergence(rec.changed_edge_fraction, cfg.stop_edge_fraction);
      }
      prev_labels = labels;
      have_labels = true;
      have_prev = true;
    }
    if (log) log->epochs.push_back(rec);
    if (stop) {
      result.termination_reason = Termination::EdgeStability;
      break;
    }
  }

  if (!have_labels) labels = extract_clusters(state.z, state.delta2);
  result.labels = std::move(labels);
  result.num_clusters =
      result.labels.empty() ? 0 : *std::max_element(result.labels.begin(), result.labels.end()) + 1;
  result.final_y = use_net ? encode(state.omega, x_cols) : x_cols;
  result.final_z = std::move(state.z);
  result.epochs_run = state.epoch;
  return result;
}

}  // namespace

ClusterResult run_dcc(const DataMatrix& x, const DccConfig& cfg,
                      const AutoencoderParams* initial_omega, RunLog* log) {
  return run_driver(x, cfg, initial_omega, log);
}

ClusterResult run_rcc(const DataMatrix& y, const DccConfig& cfg, RunLog* log) {
  DccConfig rcc_cfg = cfg;
  rcc_cfg.objective = Objective::Rcc;
  rcc_cfg.freeze_omega = true;
  return run_driver(y, rcc_cfg, nullptr, log);
}

}  // namespace dcc
