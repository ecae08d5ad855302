#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcc/dataio.hpp"
#include "dcc/graph.hpp"
#include "dcc/nncore.hpp"
#include "dcc/robust.hpp"
#include "dcc/sdae.hpp"
#include "dcc/types.hpp"

namespace dcc {

enum class Objective { Dcc, Rcc };

struct DccConfig {
  int d = 10;
  int k = 10;
  int m_period = 20;      // continuation period M, in epochs
  int edge_batch = 128;   // edges per minibatch
  int epoch_cap = 300;    // safety net; the paper has none
  std::uint64_t seed = 0;
  Metric metric = Metric::Cosine;
  std::vector<int> hidden_widths = {500, 500, 2000};

  AdamConfig adam;                 // shared settings for Z and Omega
  PretrainConfig sdae;             // SDAE initialization schedule
  double mu_init_factor = 3.0;     // mu_i = factor * (max residual)^2
  double stop_edge_fraction = 1e-3;

  Objective objective = Objective::Dcc;
  bool freeze_omega = false;           // skip all Omega updates
  std::optional<double> lambda_override;  // bypass compute_lambda

  std::vector<int> encoder_widths(Index data_dim) const;
};

/// Adam over the columns of Z with sparse updates: moments exist per column,
/// only sampled columns move, bias correction uses the shared step counter.
struct ZAdamState {
  AdamConfig cfg;
  long step = 0;
  Matrix m, v;  // d x N
};

struct TrainState {
  AutoencoderParams omega;
  Matrix z;  // d x N representatives
  RobustParams rp;
  double delta1 = 0.0, delta2 = 0.0;
  int epoch = 0;
  int m_period = 20;
  bool continuation_complete = false;
  std::uint64_t seed = 0;
  AdamState omega_adam;
  ZAdamState z_adam;
};

enum class Termination { EdgeStability, EpochCap };
std::string to_string(Termination t);

struct ClusterResult {
  std::vector<int> labels;
  int num_clusters = 0;
  Matrix final_z;  // d x N
  Matrix final_y;  // d x N
  int epochs_run = 0;
  Termination termination_reason = Termination::EpochCap;
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;             // mean over the epoch's minibatches
  double mu1 = 0.0, mu2 = 0.0;
  double changed_edge_fraction = -1.0;  // -1 before monitoring starts
  int n_clusters = -1;                  // -1 before monitoring starts
};

struct RunLog {
  SdaeLog sdae;
  std::vector<EpochRecord> epochs;
};

/// Z = Y = F_theta(X); delta1, delta2, lambda from the initial embedding;
/// mu_i started high enough to keep every observed residual in the convex
/// basin, floored at delta_i/2; fresh optimizer states.
TrainState init_state(AutoencoderParams omega, const Matrix& x_cols,
                      const NeighborhoodGraph& graph, const DccConfig& cfg);

/// Deterministic epoch partition: a seeded permutation of E cut into
/// edge_batch-sized minibatches (the last one may be smaller).
class EpochSampler {
 public:
  EpochSampler(const NeighborhoodGraph& graph, int edges_per_batch, std::mt19937_64 rng);

  bool done() const { return cursor_ >= static_cast<Index>(permutation_.size()); }
  Minibatch next(const NeighborhoodGraph& graph);
  Index n_batches() const;

 private:
  std::vector<int> permutation_;
  Index cursor_ = 0;
  int batch_edges_;
};

/// Single uniformly sampled minibatch (first slice of a fresh permutation).
Minibatch sample_edge_minibatch(const NeighborhoodGraph& graph, int m, std::mt19937_64& rng);

/// Gradient step on one minibatch: Adam update of Omega (unless frozen) and of
/// the sampled Z columns only. Returns the batch's loss terms.
LossBreakdown train_minibatch(TrainState& state, const Matrix& x_cols,
                              const NeighborhoodGraph& graph, const DccConfig& cfg,
                              const Minibatch& batch);

/// One pass over E as an epoch partition of train_minibatch steps.
EpochRecord train_epoch(TrainState& state, const Matrix& x_cols, const NeighborhoodGraph& graph,
                        const DccConfig& cfg);

/// mu_i <- max(mu_i / 2, delta_i / 2); sets continuation_complete when both
/// floors are reached (RCC mode tracks only mu2).
void continuation_step(TrainState& state, const DccConfig& cfg);

/// Fraction of edges in E whose intra/inter-cluster status differs between
/// two assignments.
double changed_edge_fraction(const std::vector<int>& labels, const std::vector<int>& prev_labels,
                             const NeighborhoodGraph& graph);

/// Stop when strictly less than `threshold` of the edges changed status.
bool check_convergence(double changed_fraction, double threshold);

/// Connected components of the threshold graph ||z_i - z_j|| < delta2 over all
/// point pairs; labels are 0..K-1 in component discovery order.
std::vector<int> extract_clusters(const Matrix& z, double delta2, int* num_clusters = nullptr);

/// Algorithm: graph construction, SDAE initialization, precomputation, epoch
/// loop with continuation and edge-stability stopping, final extraction.
/// `initial_omega` skips the SDAE phase (used for checkpoints and tests).
ClusterResult run_dcc(const DataMatrix& x, const DccConfig& cfg,
                      const AutoencoderParams* initial_omega = nullptr, RunLog* log = nullptr);

/// RCC mode: the input is taken as the fixed embedding, the quadratic-data
/// objective is optimized over Z alone with the same machinery.
ClusterResult run_rcc(const DataMatrix& y, const DccConfig& cfg, RunLog* log = nullptr);

}  // namespace dcc
