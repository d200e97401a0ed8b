#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "genmetric/dataset.hpp"
#include "genmetric/generative.hpp"
#include "genmetric/local_metric.hpp"

namespace genmetric {

/// (1/N)·Σ M_i
MetricMatrix uniform_combination(const std::vector<MetricMatrix>& locals);

/// Σ w_i·M_i with weights normalized to sum to one.
MetricMatrix weighted_combination(const std::vector<MetricMatrix>& locals, const std::vector<double>& weights,
                                  std::string method);

/// Symmetric principal root L = U·diag(√λ)·Uᵀ of a metric, so LᵀL = M.
struct TransformFactor {
  Eigen::MatrixXd L;
  MetricMatrix source;

  /// Applies z = L·x to every row.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return x * L.transpose(); }
};

TransformFactor metric_sqrt_transform(const MetricMatrix& m);

// ---------------------------------------------------------------------------
// Density estimation

/// p(x) = (1/h)·Σ_i exp(−‖x − x_i‖²/σ²),  h = n·π^(D/2)·σ^D.
double kde_density(const Eigen::MatrixXd& train, double sigma, const Eigen::VectorXd& x);
double kde_log_density(const Eigen::MatrixXd& train, double sigma, const Eigen::VectorXd& x);

/// Median Euclidean distance over all pairs of rows (or a seeded subsample
/// of at most `max_pairs` pairs).
double median_pairwise_distance(const Eigen::MatrixXd& x, std::uint64_t seed = 0, std::size_t max_pairs = 1'000'000);

struct BandwidthChoice {
  double sigma = 1.0;
  int exponent = 0;                      // σ = 2^exponent · median distance
  std::vector<double> log_likelihoods;   // per candidate exponent, ascending
};

/// Picks σ ∈ {2^k · median pairwise distance : k = −3..3} maximizing the
/// validation log-likelihood.
BandwidthChoice select_kde_bandwidth(const Eigen::MatrixXd& train, const Eigen::MatrixXd& validation);

enum class DensityEstimatorKind { Kde, Gmm };

struct DensityWeightedOptions {
  DensityEstimatorKind estimator = DensityEstimatorKind::Kde;
  int max_iter = 20;
  // Recompute local metrics each iteration from Gaussians refit in the
  // current coordinates instead of transporting the initial ones.
  bool refit_local_metrics = false;
  double lambda_cov = kDefaultCovarianceRegularizer;
  double eps_rel = kDefaultSpectralTolerance;
  int reclassify_k = 3;
  std::uint64_t seed = 0;
  // Test hook: replaces the estimator with fixed per-point weights.
  std::optional<std::vector<double>> fixed_weights;
};

struct DensityWeightedResult {
  MetricMatrix metric;                           // composed, original coordinates
  std::vector<Eigen::MatrixXd> factors;          // L_1 … L_K, one per iteration
  std::vector<std::vector<double>> weight_trajectory;
  std::vector<double> bandwidths;                // KDE only
  int fallback_iterations = 0;                   // iterations that used uniform weights
};

/// Iterative density-weighted convex combination of local metrics:
/// estimate densities, combine, transform by L, repeat. Returns
/// M_total = (L_K···L_1)ᵀ(L_K···L_1).
DensityWeightedResult density_weighted_combination(const LabeledDataset& train, const LabeledDataset& validation,
                                                   const DensityWeightedOptions& options);

// ---------------------------------------------------------------------------

struct Theorem1Diagnostics {
  double residual = 0.0;                // ‖mean Q − c·I‖_F / (c·√D)
  double max_trace_violation = 0.0;     // max_i |Tr[Q_i⁻¹Ψ_i]| / ‖Ψ_i‖_F in z-space
  double resolved_residual = 0.0;       // same residual with Q_i re-solved spectrally
  int degenerate_points = 0;
};

/// Transforms the data by L = √M, refits the class-conditionals there and
/// measures how far the average z-space local metric is from ∝ I. The
/// z-space metrics are the transported minimizers Q_i = |L|^{2/D}·L⁻¹M_iL⁻¹;
/// their optimality against the refit Ψ_i is reported alongside.
Theorem1Diagnostics theorem1_diagnostics(const LabeledDataset& train, const MetricMatrix& m, double lambda_cov);

double theorem1_residual(const LabeledDataset& train, const MetricMatrix& m, double lambda_cov);

}  // namespace genmetric
