#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genmetric/dataset.hpp"
#include "genmetric/generative.hpp"
#include "genmetric/local_metric.hpp"

namespace genmetric {

struct ClusteringResult {
  std::vector<int> assignments;
  Eigen::MatrixXd centers;               // k×D, original coordinates
  double inertia = 0.0;                  // Σ (x − c)ᵀM(x − c)
  MetricMatrix metric;
  std::vector<double> inertia_history;   // per Lloyd iteration, best restart
};

/// Lloyd's algorithm on L-transformed points (L = √M) with k-means++
/// seeding; best of `restarts` runs drawn from one seeded stream. An empty
/// cluster is re-seeded at the point farthest from its center.
ClusteringResult kmeans(const Eigen::MatrixXd& x, int k, const MetricMatrix& m, std::uint64_t seed, int restarts = 10,
                        int max_iter = 300);

/// Nearest center under M for every row (ties → lower center index).
std::vector<int> assign_to_centers(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers, const MetricMatrix& m);

struct IterativeClusteringOptions {
  int outer_iters = 10;
  double lambda_cov = kDefaultCovarianceRegularizer;
  double lambda_int = 0.0;
  double eps_rel = kDefaultSpectralTolerance;
  int restarts = 10;
  std::uint64_t seed = 0;
};

struct IterativeClusteringResult {
  ClusteringResult clustering;
  MetricMatrix metric;
  int rounds = 0;                   // metric updates performed
  bool stable = false;              // stopped because labels did not change
  std::vector<int> skipped_clusters;  // per round, clusters left out of the fit
};

/// k-means labels → Gaussians per cluster → local metrics (interpolated
/// toward I by λ_int) → uniform combination → k-means under the new metric,
/// until the partition repeats or `outer_iters` rounds have run.
IterativeClusteringResult iterative_metric_kmeans(const Eigen::MatrixXd& x, int k,
                                                  const IterativeClusteringOptions& options);

/// Fraction of point pairs on which the two labelings agree.
double rand_score(const std::vector<int>& a, const std::vector<int>& b);

struct TransferGridRow {
  double lambda_cov = 0.0;
  double lambda_int = 0.0;
  double validation_rand = 0.0;
};

struct TransferTuneResult {
  double lambda_cov = 0.0;
  double lambda_int = 0.0;
  double validation_rand = 0.0;
  std::vector<TransferGridRow> grid;
  IterativeClusteringResult model;  // refit at the selected setting
};

/// Clusters `train` at every (λ_cov, λ_int), assigns `validation` to the
/// nearest learned center and scores it against the true labels. Ties go to
/// the smaller λ_int, then the smaller λ_cov.
TransferTuneResult cluster_transfer_tune(const LabeledDataset& train, const LabeledDataset& validation,
                                         const std::vector<double>& lambda_cov_grid,
                                         const std::vector<double>& lambda_int_grid, int k,
                                         const IterativeClusteringOptions& base = {});

// ---------------------------------------------------------------------------
// Isomap

struct Embedding {
  Eigen::MatrixXd coordinates;    // one row per kept point
  std::vector<int> kept;          // original indices of the embedded points
  int excluded = 0;               // points outside the largest component
  double residual_variance = 0.0;
  int neighbor_count = 0;
  Eigen::VectorXd eigenvalues;    // top-d MDS eigenvalues
  Eigen::MatrixXd geodesics;      // among kept points
};

/// Symmetric kNN graph with edge length √((x−x')ᵀM(x−x')), geodesics by
/// Dijkstra, classical MDS to `dim` dimensions. Disconnected graphs embed
/// the largest component.
Embedding isomap_embed(const Eigen::MatrixXd& x, const MetricMatrix& m, int n_neighbors, int dim);

/// Classical MDS of a distance matrix; throws if fewer than `dim`
/// eigenvalues of the centered Gram matrix are positive.
Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& distances, int dim, Eigen::VectorXd* eigenvalues = nullptr);

/// id, coordinates…, label
void write_embedding_csv(const std::string& path, const Embedding& e, const std::vector<int>& labels);

/// id, cluster, label
void write_clusters_csv(const std::string& path, const std::vector<int>& clusters, const std::vector<int>& labels);

}  // namespace genmetric
