#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace genmetric {

/// Feature matrix (one row per point) plus contiguous class ids in [0, C).
struct LabeledDataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  int class_count = 0;
  std::vector<std::string> names;
  // Original label values, indexed by re-encoded class id.
  std::vector<double> label_values;
  bool single_class = false;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  Eigen::VectorXd point(Eigen::Index i) const { return features.row(i).transpose(); }
  std::vector<int> class_counts() const;

  /// Rows picked by `indices`, in that order. Class ids and count are kept.
  LabeledDataset subset(const std::vector<int>& indices) const;

  /// Throws unless shapes agree and every label lies in [0, class_count).
  void validate() const;
};

/// Builds a dataset from raw labels, re-encoding them by sorted value.
LabeledDataset make_dataset(Eigen::MatrixXd features, const std::vector<double>& raw_labels,
                            std::vector<std::string> names = {});

using LabelColumn = std::variant<std::string, int>;

struct CsvOptions {
  bool has_header = true;
  char delimiter = ',';
};

LabeledDataset load_csv(const std::string& path, const LabelColumn& label_column, const CsvOptions& options = {});

void write_csv(const std::string& path, const LabeledDataset& ds);

// ---------------------------------------------------------------------------
// Scaling

/// Per-feature affine map sending the training min to -1 and max to +1.
struct ScaleParams {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  LabeledDataset apply(const LabeledDataset& ds) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

ScaleParams fit_scale(const LabeledDataset& ds);

std::pair<LabeledDataset, ScaleParams> scale_features(const LabeledDataset& ds);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
  std::uint64_t seed = 1;
  bool stratified = true;

  void validate() const;
};

struct Split {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
  std::vector<int> train_indices;
  std::vector<int> validation_indices;
  std::vector<int> test_indices;
};

Split split(const LabeledDataset& ds, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// PCA

struct ProjectionParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;           // D×d, orthonormal columns
  Eigen::VectorXd explained_variance;   // fraction of total variance per component

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  LabeledDataset apply(const LabeledDataset& ds) const;
};

ProjectionParams fit_pca(const LabeledDataset& train, int target_dim);

struct PcaResult {
  ProjectionParams params;
  LabeledDataset train;
  std::vector<LabeledDataset> others;
};

/// Fits on `train` and projects `train` plus every dataset in `others`.
PcaResult pca_reduce(const LabeledDataset& train, int target_dim, const std::vector<LabeledDataset>& others = {});

// ---------------------------------------------------------------------------
// Synthetic data

struct MixtureComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  int label = 0;
};

LabeledDataset make_synthetic_mixture(const std::vector<MixtureComponent>& components, int n, std::uint64_t seed);

/// Fixed 3-class, 10-dimensional preset standing in for the "3-Normal" set.
std::vector<MixtureComponent> three_normal_preset();

}  // namespace genmetric
