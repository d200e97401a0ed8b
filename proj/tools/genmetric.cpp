// Command-line front end: fit-metric, classify, benchmark, mkl, cluster,
// embed, rank.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "genmetric/classify.hpp"
#include "genmetric/error.hpp"
#include "genmetric/experiment.hpp"
#include "genmetric/global_metric.hpp"
#include "genmetric/kernel_mkl.hpp"
#include "genmetric/serialize.hpp"
#include "genmetric/unsupervised.hpp"

namespace fs = std::filesystem;
using namespace genmetric;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string out;
  int threads = default_threads();
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app->add_option("--out", c.out, "Output path");
  app->add_option("--threads", c.threads, "OpenMP threads (default: $GENMETRIC_THREADS or 1)")
      ->check(CLI::PositiveNumber);
}

struct DataArgs {
  std::string path;
  std::string label = "label";
  bool scale = true;
  int pca = 0;
};

void add_data(CLI::App* app, DataArgs& d, const char* flag = "--data") {
  app->add_option(flag, d.path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  app->add_option("--label", d.label, "Label column name")->capture_default_str();
}

void add_preprocessing(CLI::App* app, DataArgs& d) {
  app->add_flag("!--no-scale", d.scale, "Skip [-1, 1] feature scaling");
  app->add_option("--pca", d.pca, "Project onto this many principal components (0: off)");
}

LabeledDataset read_data(const DataArgs& d) { return load_csv(d.path, d.label); }

std::string label_text(const LabeledDataset& ds, int id) {
  std::ostringstream s;
  s.precision(17);
  if (static_cast<std::size_t>(id) < ds.label_values.size()) {
    s << ds.label_values[static_cast<std::size_t>(id)];
  } else {
    s << id;
  }
  return s.str();
}

MetricMatrix metric_for(const std::string& spec, const LabeledDataset& train, double lambda_cov,
                        FittedMetric* fitted = nullptr) {
  if (spec == "euclidean") return MetricMatrix::identity(train.dim());
  if (spec == "uni" || spec == "m_uni") return fit_uniform_metric(train, lambda_cov);
  auto f = fitted_metric_from_json(load_json(spec));
  if (fitted) *fitted = f;
  return f.metric;
}

// ---------------------------------------------------------------------------

int fit_metric(const Common& c, const DataArgs& d, const std::string& method, double lambda_cov,
               double validation_fraction) {
  if (c.out.empty()) throw Error("fit-metric needs --out");
  const LabeledDataset raw = read_data(d);
  FittedMetric f;
  f.source = d.path;
  LabeledDataset train = raw;
  if (d.scale) {
    f.scale = fit_scale(train);
    train = f.scale->apply(train);
  }
  if (d.pca > 0) {
    f.projection = fit_pca(train, d.pca);
    train = f.projection->apply(train);
  }
  if (method == "m_uni") {
    f.metric = fit_uniform_metric(train, lambda_cov);
  } else if (method == "euclidean") {
    f.metric = MetricMatrix::identity(train.dim());
  } else if (method == "m_kde" || method == "m_gmm") {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) throw Error("validation fraction must lie in (0, 1)");
    // Two-way split: the third portion is folded back into validation.
    SplitSpec spec;
    spec.train = 1.0 - validation_fraction;
    spec.validation = 0.5 * validation_fraction;
    spec.test = 0.5 * validation_fraction;
    spec.seed = c.seed;
    const auto parts = split(train, spec);
    std::vector<int> held = parts.validation_indices;
    held.insert(held.end(), parts.test_indices.begin(), parts.test_indices.end());
    const LabeledDataset validation = train.subset(held);
    DensityWeightedOptions o;
    o.estimator = method == "m_kde" ? DensityEstimatorKind::Kde : DensityEstimatorKind::Gmm;
    o.lambda_cov = lambda_cov;
    o.seed = c.seed;
    f.metric = density_weighted_combination(parts.train, validation, o).metric;
  } else {
    throw Error("unknown metric method '" + method + "'");
  }
  save_json(c.out, to_json(f));
  std::cout << "wrote " << f.metric.method << " metric (" << f.metric.dim() << "x" << f.metric.dim() << ") to "
            << c.out << '\n';
  return 0;
}

int classify(const Common& c, const std::string& metric_path, const DataArgs& train_args, const DataArgs& query_args,
             int k) {
  const auto fitted = fitted_metric_from_json(load_json(metric_path));
  const LabeledDataset train = fitted.preprocess(read_data(train_args));
  const LabeledDataset query_raw = read_data(query_args);
  const Eigen::MatrixXd queries = fitted.preprocess(query_raw.features);
  const auto pred = knn_predict_batch(train, KnnConfig{k, fitted.metric, TieRule::SumDistanceThenIndex}, queries);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) throw Error("cannot write " + c.out);
    out = &file;
  }
  *out << "id,prediction,label\n";
  int wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::string p = label_text(train, pred[i]);
    const std::string truth = label_text(query_raw, query_raw.labels[i]);
    wrong += p != truth ? 1 : 0;
    *out << i << ',' << p << ',' << truth << '\n';
  }
  if (!c.out.empty()) {
    std::cout << "error " << static_cast<double>(wrong) / static_cast<double>(pred.size()) << " (" << wrong << "/"
              << pred.size() << ")\n";
  }
  return 0;
}

int benchmark(const Common& c, const std::string& config_path, bool seed_given) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  }
  if (seed_given) cfg.base_seed = c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (cfg.output_dir.empty()) cfg.output_dir = "out/" + cfg.name;
  const Report report = run_experiment(cfg, c.threads);
  write_report(report, cfg.output_dir);
  std::cout << render_table(report);
  bool any = false;
  for (const auto& m : report.methods) {
    any = any || m.failures < static_cast<int>(m.repeats.size());
    for (const auto& r : m.repeats) {
      if (!r.ok) std::cerr << m.name << " (seed " << r.seed << "): " << r.error << '\n';
    }
  }
  return any ? 0 : 1;
}

int mkl(const Common& c, const DataArgs& d, int regions, double lambda_cov, const std::vector<double>& c_grid) {
  const LabeledDataset ds = read_data(d);
  SplitSpec spec;
  spec.seed = c.seed;
  const auto prepared = prepare_split(ds, spec, Preprocessing{d.scale, d.pca});
  const auto& s = prepared.split;
  std::vector<MetricMatrix> metrics;
  if (regions == 0) {
    metrics.push_back(MetricMatrix::identity(s.train.dim()));
  } else {
    const auto models = fit_gaussian_models(s.train, lambda_cov);
    const auto locals = compute_all_local_metrics(s.train, models);
    metrics = regional_metrics(locals, s.train.features, regions, c.seed).metrics;
  }
  const auto run = mkl_tune_and_test(metrics, s.train, s.validation, s.test, c_grid, default_tau_grid(), {}, c.seed);
  std::cout << (regions == 0 ? "baseline kernels" : "metric kernels, P=" + std::to_string(regions))
            << ": C=" << run.result.selected.at("C") << " validation error " << run.result.validation_error
            << " test error " << run.result.test_error << '\n';
  if (!c.out.empty()) {
    Json j = to_json(run.model, run.bank);
    j["result"] = to_json(run.result);
    save_json(c.out, j);
  }
  return 0;
}

int cluster(const Common& c, const DataArgs& d, int k, const std::string& metric, double lambda_cov,
            double lambda_int) {
  LabeledDataset ds = read_data(d);
  if (d.scale) ds = fit_scale(ds).apply(ds);
  if (k <= 0) k = ds.class_count;
  ClusteringResult result;
  if (metric == "uni") {
    IterativeClusteringOptions o;
    o.lambda_cov = lambda_cov;
    o.lambda_int = lambda_int;
    o.seed = c.seed;
    result = iterative_metric_kmeans(ds.features, k, o).clustering;
  } else if (metric == "euclidean") {
    result = kmeans(ds.features, k, MetricMatrix::identity(ds.dim()), c.seed);
  } else {
    throw Error("cluster --metric must be 'uni' or 'euclidean'");
  }
  if (!c.out.empty()) write_clusters_csv(c.out, result.assignments, ds.labels);
  std::cout << "inertia " << result.inertia;
  if (ds.class_count > 1) std::cout << "  rand " << rand_score(result.assignments, ds.labels);
  std::cout << '\n';
  return 0;
}

int embed(const Common& c, const DataArgs& d, const std::string& metric, int neighbors, int dim, double lambda_cov) {
  const LabeledDataset raw = read_data(d);
  FittedMetric fitted;
  LabeledDataset ds = raw;
  if (metric != "euclidean" && metric != "uni" && metric != "m_uni") {
    metric_for(metric, raw, lambda_cov, &fitted);
    ds = fitted.preprocess(raw);
  } else if (d.scale) {
    ds = fit_scale(raw).apply(raw);
  }
  const MetricMatrix m = fitted.metric.matrix.size() ? fitted.metric : metric_for(metric, ds, lambda_cov);
  const auto e = isomap_embed(ds.features, m, neighbors, dim);
  if (c.out.empty()) throw Error("embed needs --out");
  write_embedding_csv(c.out, e, raw.labels);
  std::cout << "embedded " << e.kept.size() << " points (excluded " << e.excluded << "), residual variance "
            << e.residual_variance << '\n';
  return 0;
}

int rank(const Common& c, const std::vector<std::string>& reports) {
  std::vector<Json> docs;
  for (const auto& p : reports) docs.push_back(load_json(p));
  const auto table = rank_reports(docs);
  const std::string text = render_rank_table(table);
  std::cout << text;
  if (!c.out.empty()) {
    std::ofstream f(c.out);
    if (!f) throw Error("cannot write " + c.out);
    f << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative local metric learning toolkit"};
  app.require_subcommand(1);

  Common common;
  DataArgs data, train_data, query_data;
  std::string method = "m_uni", metric = "euclidean", metric_path, config_path;
  double lambda_cov = kDefaultCovarianceRegularizer, lambda_int = 0.0, validation_fraction = 0.25;
  int k = 1, regions = 1, neighbors = 10, dim = 2, clusters = 0;
  std::vector<double> c_grid = kDefaultCGrid;
  std::vector<std::string> reports;

  auto* fit = app.add_subcommand("fit-metric", "Learn a global metric from a labeled CSV");
  add_common(fit, common);
  add_data(fit, data);
  add_preprocessing(fit, data);
  fit->add_option("--method", method, "m_uni | m_kde | m_gmm | euclidean")->capture_default_str();
  fit->add_option("--lambda-cov", lambda_cov, "Covariance regularizer")->capture_default_str();
  fit->add_option("--validation-fraction", validation_fraction, "Held-out fraction for density methods")
      ->capture_default_str();

  auto* cls = app.add_subcommand("classify", "kNN predictions under a fitted metric");
  add_common(cls, common);
  cls->add_option("--metric", metric_path, "Metric JSON from fit-metric")->required()->check(CLI::ExistingFile);
  cls->add_option("--train", train_data.path, "Training CSV")->required()->check(CLI::ExistingFile);
  cls->add_option("--data", query_data.path, "Query CSV")->required()->check(CLI::ExistingFile);
  cls->add_option("--label", train_data.label, "Label column name")->capture_default_str();
  cls->add_option("-k", k, "Neighbors")->capture_default_str()->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("benchmark", "Run a JSON experiment configuration");
  add_common(bench, common);
  bench->add_option("config", config_path, "Experiment config")->required();

  auto* mkl_cmd = app.add_subcommand("mkl", "Multiple kernel learning on one seeded split");
  add_common(mkl_cmd, common);
  add_data(mkl_cmd, data);
  add_preprocessing(mkl_cmd, data);
  mkl_cmd->add_option("--regions", regions, "Regional metrics P (0: identity baseline)")->capture_default_str();
  mkl_cmd->add_option("--lambda-cov", lambda_cov, "Covariance regularizer")->capture_default_str();
  mkl_cmd->add_option("--C", c_grid, "Box-constraint grid");

  auto* cl = app.add_subcommand("cluster", "k-means with a learned or Euclidean metric");
  add_common(cl, common);
  add_data(cl, data);
  cl->add_flag("!--no-scale", data.scale, "Skip [-1, 1] feature scaling");
  cl->add_option("-k", clusters, "Clusters (default: number of labels)");
  cl->add_option("--metric", metric, "uni | euclidean")->capture_default_str();
  cl->add_option("--lambda-cov", lambda_cov, "Covariance regularizer")->capture_default_str();
  cl->add_option("--lambda-int", lambda_int, "Interpolation toward the identity")->capture_default_str();

  auto* emb = app.add_subcommand("embed", "Isomap coordinates as CSV");
  add_common(emb, common);
  add_data(emb, data);
  emb->add_flag("!--no-scale", data.scale, "Skip [-1, 1] feature scaling");
  emb->add_option("--metric", metric, "euclidean | uni | path to a metric JSON")->capture_default_str();
  emb->add_option("--neighbors", neighbors, "kNN graph size")->capture_default_str();
  emb->add_option("--dim", dim, "Embedding dimension")->capture_default_str();
  emb->add_option("--lambda-cov", lambda_cov, "Covariance regularizer for --metric uni")->capture_default_str();

  auto* rk = app.add_subcommand("rank", "Average ranks across report.json files");
  add_common(rk, common);
  rk->add_option("reports", reports, "report.json files")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  omp_set_num_threads(common.threads);

  try {
    if (*fit) return fit_metric(common, data, method, lambda_cov, validation_fraction);
    if (*cls) {
      query_data.label = train_data.label;
      return classify(common, metric_path, train_data, query_data, k);
    }
    if (*bench) return benchmark(common, config_path, bench->count("--seed") > 0);
    if (*mkl_cmd) return mkl(common, data, regions, lambda_cov, c_grid);
    if (*cl) return cluster(common, data, clusters, metric, lambda_cov, lambda_int);
    if (*emb) return embed(common, data, metric, neighbors, dim, lambda_cov);
    if (*rk) return rank(common, reports);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
