// Command-line surface for the clustering pipeline: graph construction,
// autoencoder pretraining, clustering, evaluation, and plot-data export.

#include <CLI11.hpp>

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dcc/checkpoint.hpp"
#include "dcc/dataio.hpp"
#include "dcc/dccopt.hpp"
#include "dcc/metrics.hpp"

namespace fs = std::filesystem;

namespace {

struct CliOptions {
  std::string data, labels, pred;
  std::string format = "csv";
  std::string mode = "dcc";
  std::string metric = "cosine";
  std::string out = ".";
  std::string run_dir;
  std::string graph_file, checkpoint_file;
  std::string adam_momentum_means = "beta1";
  int d = 10, k = 10, m_period = 20, edge_batch = 128, epoch_cap = 300;
  std::uint64_t seed = 0;
  double adam_lr = 1e-3, adam_momentum = 0.99;
  int sdae_epochs_per_layer = 200, sdae_finetune_epochs = 400, sdae_batch = 256;
  double sdae_dropout = 0.2, sdae_lr = 0.1, sdae_momentum = 0.9;
  bool sdae_scale_lr = true;
  double mu_init_factor = 3.0;
  std::vector<int> hidden = {500, 500, 2000};
};

dcc::DccConfig make_config(const CliOptions& opt) {
  dcc::DccConfig cfg;
  cfg.d = opt.d;
  cfg.k = opt.k;
  cfg.m_period = opt.m_period;
  cfg.edge_batch = opt.edge_batch;
  cfg.epoch_cap = opt.epoch_cap;
  cfg.seed = opt.seed;
  cfg.metric = dcc::metric_from_string(opt.metric);
  cfg.hidden_widths = opt.hidden;
  cfg.adam.lr = opt.adam_lr;
  if (opt.adam_momentum_means == "beta1") {
    cfg.adam.beta1 = opt.adam_momentum;
    cfg.adam.beta2 = 0.999;
  } else if (opt.adam_momentum_means == "beta2") {
    cfg.adam.beta1 = 0.9;
    cfg.adam.beta2 = opt.adam_momentum;
  } else {
    throw dcc::Error("config-error", "adam-momentum-means must be beta1 or beta2");
  }
  cfg.mu_init_factor = opt.mu_init_factor;
  cfg.sdae.per_layer_epochs = opt.sdae_epochs_per_layer;
  cfg.sdae.finetune_epochs = opt.sdae_finetune_epochs;
  cfg.sdae.minibatch_size = opt.sdae_batch;
  cfg.sdae.dropout_p = opt.sdae_dropout;
  cfg.sdae.base_lr = opt.sdae_lr;
  cfg.sdae.momentum = opt.sdae_momentum;
  cfg.sdae.scale_lr_with_dim = opt.sdae_scale_lr;
  cfg.sdae.seed = opt.seed;
  return cfg;
}

dcc::DataMatrix load_normalized(const CliOptions& opt) {
  if (opt.data.empty()) throw dcc::Error("config-error", "--data is required");
  dcc::DataMatrix m =
      dcc::load_matrix(opt.data, dcc::matrix_format_from_string(opt.format));
  m = dcc::normalize_features(m);
  if (!opt.labels.empty()) dcc::attach_labels(m, dcc::load_labels(opt.labels));
  return m;
}

std::string out_path(const CliOptions& opt, const char* name) {
  fs::create_directories(opt.out);
  return (fs::path(opt.out) / name).string();
}

void write_run_log(const std::string& path, const dcc::RunLog& log) {
  std::ofstream out(path);
  if (!out) throw dcc::Error("io-error", "cannot open '" + path + "' for writing");
  char buf[512];
  out << "# dcc-run-log 1\n";
  out << "# epoch recon data pairwise total mu1 mu2 changed_edge_fraction n_clusters\n";
  for (const auto& rec : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d\n",
                  rec.epoch, rec.loss.recon, rec.loss.data, rec.loss.pairwise, rec.loss.total,
                  rec.mu1, rec.mu2, rec.changed_edge_fraction, rec.n_clusters);
    out << buf;
  }
}

void write_sdae_log(const std::string& path, const dcc::SdaeLog& log) {
  std::ofstream out(path);
  if (!out) throw dcc::Error("io-error", "cannot open '" + path + "' for writing");
  char buf[128];
  out << "# dcc-sdae-log 1\n";
  out << "# stage epoch mse\n";
  for (const auto& rec : log) {
    std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", rec.stage, rec.epoch, rec.mse);
    out << buf;
  }
}

int cmd_build_graph(const CliOptions& opt) {
  const dcc::DataMatrix m = load_normalized(opt);
  const dcc::DccConfig cfg = make_config(opt);

  auto neighbors = dcc::knn_neighbors(m.values, cfg.k, cfg.metric);
  auto mutual = dcc::mutual_knn_edges(neighbors);
  const int pre_components = dcc::count_components(static_cast<int>(m.n_points()), mutual);

  dcc::NeighborhoodGraph graph;
  graph.n_nodes = static_cast<int>(m.n_points());
  graph.edges = dcc::mst_augment(mutual, neighbors, m.values, cfg.metric);
  dcc::compute_weights(graph);

  const std::string path =
      opt.graph_file.empty() ? out_path(opt, "graph.txt") : opt.graph_file;
  dcc::save_graph(path, graph, cfg.k, cfg.metric);

  const auto [min_it, max_it] = std::minmax_element(graph.degrees.begin(), graph.degrees.end());
  std::cout << "graph-file " << path << '\n'
            << "edges " << graph.n_edges() << '\n'
            << "components-pre-augmentation " << pre_components << '\n'
            << "degree-min " << *min_it << '\n'
            << "degree-mean " << graph.mean_degree << '\n'
            << "degree-max " << *max_it << '\n';
  return 0;
}

int cmd_pretrain(const CliOptions& opt) {
  const dcc::DataMatrix m = load_normalized(opt);
  const dcc::DccConfig cfg = make_config(opt);

  dcc::SdaeLog log;
  const dcc::Matrix x_cols = m.values.transpose();
  dcc::PretrainConfig sdae_cfg = cfg.sdae;
  const dcc::AutoencoderParams params =
      dcc::initialize_autoencoder(x_cols, cfg.encoder_widths(m.n_dims()), sdae_cfg, &log);

  const std::string path =
      opt.checkpoint_file.empty() ? out_path(opt, "checkpoint.bin") : opt.checkpoint_file;
  dcc::save_pretrained(path, params);
  write_sdae_log(out_path(opt, "sdae_loss.log"), log);

  std::cout << "checkpoint " << path << '\n'
            << "reconstruction-mse " << dcc::reconstruction_mse(params, x_cols) << '\n';
  return 0;
}

int cmd_cluster(const CliOptions& opt) {
  const dcc::DataMatrix m = load_normalized(opt);
  dcc::DccConfig cfg = make_config(opt);

  dcc::RunLog log;
  dcc::ClusterResult result;
  if (opt.mode == "rcc") {
    result = dcc::run_rcc(m, cfg, &log);
  } else if (opt.mode == "dcc") {
    std::optional<dcc::AutoencoderParams> omega;
    if (!opt.checkpoint_file.empty()) omega = dcc::load_pretrained(opt.checkpoint_file);
    result = dcc::run_dcc(m, cfg, omega ? &*omega : nullptr, &log);
  } else {
    throw dcc::Error("config-error", "mode must be dcc or rcc");
  }

  dcc::save_labels(out_path(opt, "labels.txt"), result.labels);
  dcc::save_matrix(out_path(opt, "embedding.bin"), result.final_z, dcc::MatrixFormat::Binary);
  write_run_log(out_path(opt, "metrics.log"), log);
  if (!log.sdae.empty()) write_sdae_log(out_path(opt, "sdae_loss.log"), log.sdae);

  std::cout << "num-clusters " << result.num_clusters << '\n'
            << "termination " << dcc::to_string(result.termination_reason) << '\n'
            << "epochs " << result.epochs_run << '\n';
  if (m.labels) {
    std::printf("ami %.6f\n", dcc::ami(*m.labels, result.labels));
    std::printf("nmi %.6f\n", dcc::nmi(*m.labels, result.labels));
    std::printf("acc %.6f\n", dcc::acc(*m.labels, result.labels));
  }
  return 0;
}

int cmd_evaluate(const CliOptions& opt) {
  if (opt.pred.empty() || opt.labels.empty())
    throw dcc::Error("config-error", "evaluate requires --pred and --labels");
  const std::vector<int> pred = dcc::load_labels(opt.pred);
  const std::vector<int> truth = dcc::load_labels(opt.labels);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "ami %.6f\nnmi %.6f\nacc %.6f\n", dcc::ami(truth, pred),
                dcc::nmi(truth, pred), dcc::acc(truth, pred));
  std::cout << buf;
  std::ofstream out(out_path(opt, "scores.txt"));
  out << buf;
  return 0;
}

// Reads a run directory and emits plain-CSV plot data.
int cmd_export_plotdata(const CliOptions& opt) {
  const fs::path run = opt.run_dir.empty() ? fs::path(opt.out) : fs::path(opt.run_dir);
  const fs::path log_path = run / "metrics.log";
  if (!fs::exists(log_path))
    throw dcc::Error("missing-log", "no metrics.log under '" + run.string() + "'");

  std::ifstream in(log_path);
  std::string line;
  std::getline(in, line);
  if (line != "# dcc-run-log 1")
    throw dcc::Error("version-mismatch", "'" + log_path.string() + "' is not a dcc-run-log v1");
  std::getline(in, line);  // column header comment

  std::ofstream loss(run / "loss_curves.csv");
  std::ofstream mu(run / "mu_schedule.csv");
  std::ofstream clusters(run / "clusters_vs_epoch.csv");
  loss << "epoch,recon,data,pairwise,total\n";
  mu << "epoch,mu1,mu2\n";
  clusters << "epoch,n_clusters,changed_edge_fraction\n";
  int epoch = 0, n_clusters = 0;
  double recon, data, pairwise, total, mu1, mu2, changed;
  char buf[512];
  while (in >> epoch >> recon >> data >> pairwise >> total >> mu1 >> mu2 >> changed >>
         n_clusters) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", epoch, recon, data, pairwise,
                  total);
    loss << buf;
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", epoch, mu1, mu2);
    mu << buf;
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", epoch, n_clusters, changed);
    clusters << buf;
  }

  const fs::path sdae_path = run / "sdae_loss.log";
  if (fs::exists(sdae_path)) {
    std::ifstream sin(sdae_path);
    std::getline(sin, line);
    std::getline(sin, line);
    std::ofstream sdae(run / "sdae_loss.csv");
    sdae << "stage,epoch,mse\n";
    int stage = 0, ep = 0;
    double mse = 0;
    while (sin >> stage >> ep >> mse) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", stage, ep, mse);
      sdae << buf;
    }
  }

  // 2-D PCA projection of the exported embedding, one row per datapoint.
  const fs::path emb_path = run / "embedding.bin";
  const fs::path labels_path = run / "labels.txt";
  if (fs::exists(emb_path) && fs::exists(labels_path)) {
    const dcc::Matrix z =
        dcc::load_matrix(emb_path.string(), dcc::MatrixFormat::Binary).values;  // d x N
    const std::vector<int> labels = dcc::load_labels(labels_path.string());
    if (static_cast<dcc::Index>(labels.size()) != z.cols())
      throw dcc::Error("length-mismatch", "embedding and labels disagree on N");

    dcc::Matrix centered = z.colwise() - z.rowwise().mean();
    dcc::Matrix cov = centered * centered.transpose() / static_cast<double>(z.cols());
    Eigen::SelfAdjointEigenSolver<dcc::Matrix> eig(cov);
    dcc::Matrix basis = eig.eigenvectors().rightCols(2).rowwise().reverse();  // descending
    for (dcc::Index c = 0; c < basis.cols(); ++c) {
      dcc::Index argmax = 0;
      basis.col(c).cwiseAbs().maxCoeff(&argmax);
      if (basis(argmax, c) < 0.0) basis.col(c) = -basis.col(c);
    }
    dcc::Matrix proj = basis.transpose() * centered;  // 2 x N

    std::ofstream pca(run / "pca_projection.csv");
    pca << "pc1,pc2,label\n";
    for (dcc::Index i = 0; i < proj.cols(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", proj(0, i), proj(1, i), labels[i]);
      pca << buf;
    }
  }
  std::cout << "exported " << run.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep continuous clustering pipeline"};
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_config("--config", "", "flat key=value configuration file");

  CliOptions opt;
  app.add_option("--data", opt.data, "feature matrix path");
  app.add_option("--labels", opt.labels, "ground-truth labels path (one integer per line)");
  app.add_option("--pred", opt.pred, "predicted labels path (evaluate)");
  app.add_option("--format", opt.format, "matrix format: csv|binary");
  app.add_option("--d", opt.d, "embedding dimensionality");
  app.add_option("--k", opt.k, "nearest-neighbor count for graph construction");
  app.add_option("--m-period", opt.m_period, "continuation period M in epochs");
  app.add_option("--edges-per-batch", opt.edge_batch, "edges sampled per minibatch");
  app.add_option("--epoch-cap", opt.epoch_cap, "hard epoch limit");
  app.add_option("--seed", opt.seed, "run seed");
  app.add_option("--mode", opt.mode, "dcc|rcc");
  app.add_option("--metric", opt.metric, "cosine|euclidean");
  app.add_option("--out", opt.out, "output directory");
  app.add_option("--run", opt.run_dir, "run directory to export (defaults to --out)");
  app.add_option("--graph-file", opt.graph_file, "graph cache path");
  app.add_option("--checkpoint", opt.checkpoint_file, "pretrained autoencoder checkpoint");
  app.add_option("--adam-lr", opt.adam_lr, "Adam learning rate");
  app.add_option("--adam-momentum", opt.adam_momentum, "Adam momentum value");
  app.add_option("--adam-momentum-means", opt.adam_momentum_means,
                 "interpret momentum as beta1|beta2");
  app.add_option("--mu-init-factor", opt.mu_init_factor, "initial mu = factor * max residual^2");
  app.add_option("--hidden", opt.hidden, "autoencoder hidden widths")->delimiter(',');
  app.add_option("--sdae-epochs-per-layer", opt.sdae_epochs_per_layer, "pretraining epochs per pair");
  app.add_option("--sdae-finetune-epochs", opt.sdae_finetune_epochs, "finetuning epochs");
  app.add_option("--sdae-batch", opt.sdae_batch, "SDAE minibatch size");
  app.add_option("--sdae-dropout", opt.sdae_dropout, "SDAE input corruption probability");
  app.add_option("--sdae-lr", opt.sdae_lr, "SDAE base learning rate");
  app.add_option("--sdae-momentum", opt.sdae_momentum, "SDAE SGD momentum");
  app.add_flag("--sdae-scale-lr,!--no-sdae-scale-lr", opt.sdae_scale_lr,
               "scale the SDAE learning rate with data dimensionality");

  app.require_subcommand(1);
  auto* build = app.add_subcommand("build-graph", "construct and persist the neighborhood graph");
  auto* pretrain = app.add_subcommand("pretrain", "SDAE initialization checkpoint");
  auto* cluster = app.add_subcommand("cluster", "run the full clustering pipeline");
  auto* evaluate = app.add_subcommand("evaluate", "AMI/NMI/ACC against ground truth");
  auto* exportpd = app.add_subcommand("export-plotdata", "emit CSV plot data for a run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build_graph(opt);
    if (pretrain->parsed()) return cmd_pretrain(opt);
    if (cluster->parsed()) return cmd_cluster(opt);
    if (evaluate->parsed()) return cmd_evaluate(opt);
    if (exportpd->parsed()) return cmd_export_plotdata(opt);
  } catch (const dcc::Error& e) {
    std::cerr << "error: " << e.tag() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
