#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "genmetric/classify.hpp"
#include "genmetric/dataset.hpp"
#include "genmetric/local_metric.hpp"

namespace genmetric {

// Metric RBF kernel k(x, x') = exp(−(x−x')ᵀM(x−x') / σ²).
struct BaseKernel {
  MetricMatrix metric;
  double sigma2 = 1.0;
  double tau = 1.0;        // σ² = σ₀²(M) / τ
  int metric_index = 0;    // position of `metric` in the bank's metric list
};

double rbf_metric_kernel(const BaseKernel& bk, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// τ ∈ {2⁻⁶, 2⁻⁵, …, 2⁸}
std::vector<double> default_tau_grid();

/// Median squared distance under M over training pairs (at most `max_pairs`
/// pairs, sampled with `seed` when there are more).
double median_squared_distance(const Eigen::MatrixXd& x, const MetricMatrix& m, std::uint64_t seed = 0,
                               std::size_t max_pairs = 1'000'000);

/// One kernel per (metric, τ): σ² = σ₀²(M)/τ. Metric-major order.
std::vector<BaseKernel> build_kernel_bank(const std::vector<MetricMatrix>& metrics, const std::vector<double>& tau_grid,
                                          const Eigen::MatrixXd& x_train, std::uint64_t seed = 0);

Eigen::MatrixXd gram_matrix(const BaseKernel& bk, const Eigen::MatrixXd& x);

/// Rows index `queries`, columns index `reference`.
Eigen::MatrixXd cross_gram(const BaseKernel& bk, const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference);

// ---------------------------------------------------------------------------
// SVM dual

struct SvmOptions {
  double tolerance = 1e-4;     // on the maximal KKT violation
  long max_iter = 0;           // 0: max(10⁷, 100·N)
};

struct SvmSolution {
  Eigen::VectorXd beta;
  double bias = 0.0;
  double objective = 0.0;      // Σβ − ½βᵀ(y∘K∘y)β at the returned β
  double max_violation = 0.0;
  long iterations = 0;
  bool converged = false;
};

/// SMO on  max Σβ − ½βᵀ(y∘K∘y)β  s.t. 0 ≤ β ≤ C, Σβy = 0  (y ∈ {±1}).
/// Working pairs use second-order selection; the bias averages over free
/// support vectors. `warm_start` must be feasible when given.
SvmSolution svm_solve(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c, const SvmOptions& options = {},
                      const Eigen::VectorXd* warm_start = nullptr);

/// Σ_i β_i y_i K(q, i) + b for every query row of `cross`.
Eigen::VectorXd svm_decision(const Eigen::MatrixXd& cross, const Eigen::VectorXd& beta, const Eigen::VectorXd& y,
                             double bias);

// ---------------------------------------------------------------------------
// Kernel weight learning

struct MklOptions {
  double c = 1.0;
  double tolerance = 1e-4;     // on ‖Δα‖₁ and on the objective decrease
  int max_iter = 200;
  int max_backtracks = 30;
  SvmOptions svm;
};

struct MklModel {
  Eigen::VectorXd alpha;       // on the simplex
  Eigen::VectorXd beta;
  Eigen::VectorXd y;           // ±1
  double bias = 0.0;
  double c = 1.0;
  std::vector<int> support;    // indices with β > 0
  std::vector<double> objective_history;  // J(α) after every accepted step
  int iterations = 0;
  bool converged = false;
  bool svm_converged = true;
};

/// Euclidean projection onto {α ≥ 0, Σα = 1}.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Σ α_k K_k, skipping zero weights.
Eigen::MatrixXd combine_kernels(const std::vector<Eigen::MatrixXd>& grams, const Eigen::VectorXd& alpha);

/// min over the simplex of J(α) = max_β Σβ − ½βᵀ(y∘K(α)∘y)β, by projected
/// gradient with backtracking; only steps that lower J are accepted.
MklModel mkl_train(const std::vector<Eigen::MatrixXd>& grams, const Eigen::VectorXd& y, const MklOptions& options);

/// Decision values for query rows; `cross[k]` is queries × train for kernel k.
Eigen::VectorXd mkl_decision(const MklModel& model, const std::vector<Eigen::MatrixXd>& cross);

/// Binary problems use one model (class 1 is the positive side); more
/// classes use one-vs-all models, one per class.
struct MklClassifier {
  int class_count = 0;
  std::vector<MklModel> models;
};

MklClassifier mkl_train_multiclass(const std::vector<Eigen::MatrixXd>& grams, const std::vector<int>& labels,
                                   int class_count, const MklOptions& options);

/// Argmax of one-vs-all decision values; ties go to the lower class.
std::vector<int> mkl_predict(const MklClassifier& model, const std::vector<Eigen::MatrixXd>& cross);

inline const std::vector<double> kDefaultCGrid{0.1, 1.0, 10.0, 100.0};

struct MklRun {
  TunedResult result;
  MklClassifier model;
  std::vector<BaseKernel> bank;
};

/// Builds the bank on `train`, selects C on `validation` (ties → smaller C),
/// reports the test error of the selected model.
MklRun mkl_tune_and_test(const std::vector<MetricMatrix>& metrics, const LabeledDataset& train,
                         const LabeledDataset& validation, const LabeledDataset& test,
                         const std::vector<double>& c_grid = kDefaultCGrid,
                         const std::vector<double>& tau_grid = default_tau_grid(), const MklOptions& options = {},
                         std::uint64_t seed = 0);

}  // namespace genmetric
