#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genmetric/dataset.hpp"
#include "genmetric/serialize.hpp"
#include "genmetric/unsupervised.hpp"

namespace genmetric {

enum class MethodKind {
  Euclidean,
  GlmInt,
  MUni,
  MUniEnergy,
  MGmm,
  MKde,
  MklBaseline,
  MklMetric,
  ClusterUni,
  ClusterEuclidean,
  Isomap,
};

struct MethodSpec {
  MethodKind kind = MethodKind::Euclidean;
  int regions = 1;  // mkl_metric(P)

  std::string name() const;
  /// "error" (lower is better), "rand" (higher) or "residual_variance" (lower).
  std::string measure() const;
};

/// Accepts the names listed in the README, with "mkl_metric(P)" for P regions.
MethodSpec parse_method(const std::string& text);

struct DatasetSource {
  std::string csv;                  // path, relative to the config file
  std::string label_column = "label";
  bool has_header = true;
  std::string synthetic;            // "three_normal"
  int synthetic_n = 300;
  std::uint64_t synthetic_seed = 7;
  int subsample = 0;                // keep a seeded random subset when > 0
};

struct Preprocessing {
  bool scale = true;                // [-1, 1] from training statistics
  int pca_dim = 0;                  // 0: no projection
};

struct Grids {
  std::vector<int> k;
  std::vector<double> lambda_int;
  std::vector<double> beta;
  std::vector<double> c;
  std::vector<double> tau;
  std::vector<double> cluster_lambda_cov{1e-3, 1e-2, 1e-1};
  std::vector<double> cluster_lambda_int{0.0, 0.25, 0.5, 0.75};
};

struct MethodOptions {
  double lambda_cov = kDefaultCovarianceRegularizer;
  int density_max_iter = 20;
  bool refit_local_metrics = false;
  int cluster_restarts = 10;
  int cluster_outer_iters = 10;
  int isomap_neighbors = 10;
  int isomap_dim = 2;
  std::string isomap_metric = "m_uni";  // or "euclidean"
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSource dataset;
  Preprocessing preprocessing;
  std::vector<MethodSpec> methods;
  SplitSpec split;
  int repeats = 1;
  std::uint64_t base_seed = 1;
  Grids grids;
  MethodOptions options;
  std::string output_dir;
  std::string base_dir;  // directory relative paths resolve against
};

/// Strict parse: unknown keys, a wrong schema_version or bad values throw.
ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

LabeledDataset load_dataset(const DatasetSource& source, const std::string& base_dir);

/// One split with preprocessing fitted on its training part.
struct PreparedSplit {
  Split split;
  std::optional<ScaleParams> scale;
  std::optional<ProjectionParams> projection;
};

PreparedSplit prepare_split(const LabeledDataset& ds, const SplitSpec& spec, const Preprocessing& pre);

/// M^UNI on a training set: Gaussians, local metrics, uniform average.
MetricMatrix fit_uniform_metric(const LabeledDataset& train, double lambda_cov = kDefaultCovarianceRegularizer);

struct MethodRepeat {
  bool ok = false;
  std::string error;
  std::uint64_t seed = 0;
  double value = 0.0;
  std::map<std::string, double> selected;
  std::map<std::string, double> timing;  // seconds per phase
};

struct MethodSummary {
  std::string name;
  std::string measure;
  std::vector<MethodRepeat> repeats;
  double mean = 0.0;
  double standard_error = 0.0;  // sample std / √n over successful repeats
  int failures = 0;
};

struct Report {
  std::string name;
  std::string dataset;
  int points = 0;
  int dimension = 0;
  int classes = 0;
  int repeats = 0;
  std::vector<MethodSummary> methods;
  double seconds = 0.0;
  std::optional<Embedding> embedding;  // first isomap repeat
  std::vector<int> embedding_labels;
};

/// Runs every method on every repeat (split seed = base_seed + repeat).
/// Repeats are distributed over `threads` OpenMP threads; results do not
/// depend on the thread count.
Report run_experiment(const ExperimentConfig& config, int threads = 1);

Json to_json(const Report& r);
std::string render_table(const Report& r);

/// report.json, report.csv, table.txt (plus embedding.csv for isomap runs).
void write_report(const Report& r, const std::string& dir);

// ---------------------------------------------------------------------------
// Average ranks across datasets

struct RankTable {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  std::vector<std::vector<double>> ranks;  // [dataset][method]
  std::vector<double> average;
};

/// Rank 1 is best; ties share the mean of the ranks they span. Only
/// methods present for every dataset are ranked.
RankTable average_ranks(const std::vector<std::string>& datasets,
                        const std::vector<std::map<std::string, double>>& scores, bool lower_is_better = true);

/// Ranks the "error" methods of several report.json documents.
RankTable rank_reports(const std::vector<Json>& reports);

std::string render_rank_table(const RankTable& t);

/// Thread count from GENMETRIC_THREADS, else 1.
int default_threads();

}  // namespace genmetric
