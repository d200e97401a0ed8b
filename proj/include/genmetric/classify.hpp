#pragma once

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "genmetric/dataset.hpp"
#include "genmetric/generative.hpp"
#include "genmetric/local_metric.hpp"

namespace genmetric {

/// Squared Mahalanobis distance (x−x')ᵀM(x−x'); "distance" throughout
/// follows this squared convention.
double mahalanobis_distance(const MetricMatrix& m, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Vote ties go to the class whose members have the smaller summed distance,
// then to the lower class index.
enum class TieRule { SumDistanceThenIndex };

struct KnnConfig {
  int k = 1;
  MetricMatrix metric;
  TieRule tie_rule = TieRule::SumDistanceThenIndex;
};

int knn_predict(const LabeledDataset& train, const KnnConfig& cfg, const Eigen::VectorXd& x);

std::vector<int> knn_predict_batch(const LabeledDataset& train, const KnnConfig& cfg, const Eigen::MatrixXd& queries);

/// Majority vote over the first `k` entries of `order` (neighbor indices
/// sorted by increasing distance `dist`).
int knn_vote(const std::vector<int>& order, const Eigen::Ref<const Eigen::VectorXd>& dist,
             const std::vector<int>& labels, int class_count, int k);

/// Indices of `dist` sorted by (distance, index).
std::vector<int> neighbor_order(const Eigen::Ref<const Eigen::VectorXd>& dist);

// ---------------------------------------------------------------------------
// Energy-based classification

struct EnergyConfig {
  int k = 1;
  double margin = 0.0;
  MetricMatrix metric;
};

/// E_c(x) = Σ_{j∈N_c} d_j + Σ_{j∈N_c} Σ_{l∈N_¬c} max(0, margin + d_j − d_l)
/// with N_c the k nearest members of c and N_¬c the k nearest non-members.
std::vector<double> class_energies(const Eigen::Ref<const Eigen::VectorXd>& dist, const std::vector<int>& labels,
                                   int class_count, int k, double margin);

int energy_predict(const LabeledDataset& train, const EnergyConfig& cfg, const Eigen::VectorXd& x);

std::vector<int> energy_predict_batch(const LabeledDataset& train, const EnergyConfig& cfg,
                                      const Eigen::MatrixXd& queries);

struct MarginCandidates {
  double gamma0 = 0.0;
  std::vector<double> margins;
};

/// γ₀ = median over training points of (distance to the nearest other-class
/// point − distance to the nearest same-class point); margins β·γ₀ clipped at 0.
MarginCandidates margin_candidates(const LabeledDataset& train, const MetricMatrix& m,
                                   const std::vector<double>& beta_grid);

// ---------------------------------------------------------------------------
// Evaluation and tuning

double evaluate_error(const std::vector<int>& predictions, const std::vector<int>& truth);
double evaluate_error(const std::function<int(const Eigen::VectorXd&)>& predictor, const LabeledDataset& test);

inline const std::vector<int> kDefaultKGrid{1, 3, 5, 7, 9, 11, 13, 15};
inline const std::vector<double> kDefaultLambdaIntGrid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
inline const std::vector<double> kDefaultBetaGrid{0.25, 0.5, 1.0, 2.0, 4.0};

/// kNN with one global metric; grid over k.
struct KnnMethod {
  MetricMatrix metric;
  std::vector<int> k_grid = kDefaultKGrid;
};

/// kNN where each query uses its own local metric, interpolated with the
/// identity; grid over k and the interpolation weight.
struct GlmIntMethod {
  GenerativeModelSet models;
  std::vector<int> k_grid = kDefaultKGrid;
  std::vector<double> lambda_grid = kDefaultLambdaIntGrid;
  double eps_rel = kDefaultSpectralTolerance;
};

/// Energy classification with one global metric; grid over k and β.
struct EnergyMethod {
  MetricMatrix metric;
  std::vector<int> k_grid = kDefaultKGrid;
  std::vector<double> beta_grid = kDefaultBetaGrid;
};

using MethodDescriptor = std::variant<KnnMethod, GlmIntMethod, EnergyMethod>;

struct GridRow {
  std::map<std::string, double> params;
  double validation_error = 0.0;
};

struct TunedResult {
  std::map<std::string, double> selected;
  std::vector<GridRow> grid;
  double validation_error = 0.0;
  double test_error = 0.0;
  std::vector<int> test_predictions;
  double seconds = 0.0;          // total
  double tuning_seconds = 0.0;   // grid search on validation
  double testing_seconds = 0.0;
};

/// Grid search on the validation set (ties → smaller k, then smaller λ/β),
/// then the winner's error on the test set.
TunedResult tune_and_test(const MethodDescriptor& method, const LabeledDataset& train,
                          const LabeledDataset& validation, const LabeledDataset& test);

/// Per-query GLM^INT predictions for several (k, λ) pairs at once;
/// result[λ index][k index][query].
std::vector<std::vector<std::vector<int>>> glm_int_predictions(const LabeledDataset& train, const GlmIntMethod& m,
                                                               const Eigen::MatrixXd& queries);

}  // namespace genmetric
