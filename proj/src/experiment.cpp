#include "genmetric/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <omp.h>

#include "genmetric/classify.hpp"
#include "genmetric/error.hpp"
#include "genmetric/global_metric.hpp"
#include "genmetric/kernel_mkl.hpp"
#include "genmetric/local_metric.hpp"

namespace fs = std::filesystem;

namespace genmetric {

namespace {

const std::map<std::string, MethodKind>& method_names() {
  static const std::map<std::string, MethodKind> names{
      {"euclidean", MethodKind::Euclidean},
      {"glm_int", MethodKind::GlmInt},
      {"m_uni", MethodKind::MUni},
      {"m_uni_energy", MethodKind::MUniEnergy},
      {"m_gmm", MethodKind::MGmm},
      {"m_kde", MethodKind::MKde},
      {"mkl_baseline", MethodKind::MklBaseline},
      {"mkl_metric", MethodKind::MklMetric},
      {"cluster_uni", MethodKind::ClusterUni},
      {"cluster_euclidean", MethodKind::ClusterEuclidean},
      {"isomap", MethodKind::Isomap},
  };
  return names;
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw Error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(std::string("invalid value for '") + key + "'");
  }
}

double since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

std::string MethodSpec::name() const {
  for (const auto& [name, k] : method_names()) {
    if (k != kind) continue;
    if (kind == MethodKind::MklMetric) return name + "(" + std::to_string(regions) + ")";
    return name;
  }
  return "unknown";
}

std::string MethodSpec::measure() const {
  switch (kind) {
    case MethodKind::ClusterUni:
    case MethodKind::ClusterEuclidean: return "rand";
    case MethodKind::Isomap: return "residual_variance";
    default: return "error";
  }
}

MethodSpec parse_method(const std::string& text) {
  std::string base = text;
  MethodSpec spec;
  const auto open = text.find('(');
  if (open != std::string::npos) {
    if (text.back() != ')') throw Error("malformed method name '" + text + "'");
    base = text.substr(0, open);
    const std::string arg = text.substr(open + 1, text.size() - open - 2);
    if (base != "mkl_metric") throw Error("method '" + base + "' takes no argument");
    try {
      std::size_t used = 0;
      spec.regions = std::stoi(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw Error("malformed region count in '" + text + "'");
    }
    if (spec.regions < 1) throw Error("mkl_metric needs at least one region");
  }
  const auto it = method_names().find(base);
  if (it == method_names().end()) throw Error("unknown method '" + text + "'");
  spec.kind = it->second;
  return spec;
}

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig parse_config(const Json& j, const std::string& base_dir) {
  check_keys(j, {"schema_version", "name", "dataset", "preprocessing", "methods", "split", "grids", "options", "output"},
             "config");
  if (!j.contains("schema_version") || j.at("schema_version") != 1) throw Error("config schema_version must be 1");
  ExperimentConfig c;
  c.base_dir = base_dir;
  read(j, "name", c.name);
  read(j, "output", c.output_dir);

  if (!j.contains("dataset")) throw Error("config needs a dataset");
  const auto& d = j.at("dataset");
  check_keys(d, {"csv", "label_column", "has_header", "synthetic", "n", "seed", "subsample"}, "dataset");
  read(d, "csv", c.dataset.csv);
  read(d, "label_column", c.dataset.label_column);
  read(d, "has_header", c.dataset.has_header);
  read(d, "synthetic", c.dataset.synthetic);
  read(d, "n", c.dataset.synthetic_n);
  read(d, "seed", c.dataset.synthetic_seed);
  read(d, "subsample", c.dataset.subsample);
  if (c.dataset.csv.empty() == c.dataset.synthetic.empty()) throw Error("dataset needs exactly one of csv or synthetic");
  if (!c.dataset.synthetic.empty() && c.dataset.synthetic != "three_normal") {
    throw Error("unknown synthetic preset '" + c.dataset.synthetic + "'");
  }
  if (c.dataset.synthetic_n < 1 || c.dataset.subsample < 0) throw Error("dataset sizes must be positive");

  if (j.contains("preprocessing")) {
    const auto& p = j.at("preprocessing");
    check_keys(p, {"scale", "pca_dim"}, "preprocessing");
    read(p, "scale", c.preprocessing.scale);
    read(p, "pca_dim", c.preprocessing.pca_dim);
    if (c.preprocessing.pca_dim < 0) throw Error("pca_dim must be non-negative");
  }

  if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty()) {
    throw Error("config needs a non-empty methods list");
  }
  for (const auto& m : j.at("methods")) {
    if (!m.is_string()) throw Error("method entries must be strings");
    c.methods.push_back(parse_method(m.get<std::string>()));
  }

  if (j.contains("split")) {
    const auto& s = j.at("split");
    check_keys(s, {"train", "validation", "test", "repeats", "base_seed", "stratified"}, "split");
    read(s, "train", c.split.train);
    read(s, "validation", c.split.validation);
    read(s, "test", c.split.test);
    read(s, "stratified", c.split.stratified);
    read(s, "repeats", c.repeats);
    read(s, "base_seed", c.base_seed);
  }
  if (c.repeats < 1) throw Error("repeats must be at least 1");
  c.split.seed = c.base_seed;
  c.split.validate();

  c.grids.k = kDefaultKGrid;
  c.grids.lambda_int = kDefaultLambdaIntGrid;
  c.grids.beta = kDefaultBetaGrid;
  c.grids.c = kDefaultCGrid;
  c.grids.tau = default_tau_grid();
  if (j.contains("grids")) {
    const auto& g = j.at("grids");
    check_keys(g, {"k", "lambda_int", "beta", "C", "tau", "cluster_lambda_cov", "cluster_lambda_int"}, "grids");
    read(g, "k", c.grids.k);
    read(g, "lambda_int", c.grids.lambda_int);
    read(g, "beta", c.grids.beta);
    read(g, "C", c.grids.c);
    read(g, "tau", c.grids.tau);
    read(g, "cluster_lambda_cov", c.grids.cluster_lambda_cov);
    read(g, "cluster_lambda_int", c.grids.cluster_lambda_int);
  }

  if (j.contains("options")) {
    const auto& o = j.at("options");
    check_keys(o, {"lambda_cov", "density_max_iter", "refit_local_metrics", "cluster_restarts", "cluster_outer_iters",
                   "isomap_neighbors", "isomap_dim", "isomap_metric"},
               "options");
    read(o, "lambda_cov", c.options.lambda_cov);
    read(o, "density_max_iter", c.options.density_max_iter);
    read(o, "refit_local_metrics", c.options.refit_local_metrics);
    read(o, "cluster_restarts", c.options.cluster_restarts);
    read(o, "cluster_outer_iters", c.options.cluster_outer_iters);
    read(o, "isomap_neighbors", c.options.isomap_neighbors);
    read(o, "isomap_dim", c.options.isomap_dim);
    read(o, "isomap_metric", c.options.isomap_metric);
    if (c.options.isomap_metric != "m_uni" && c.options.isomap_metric != "euclidean") {
      throw Error("isomap_metric must be 'm_uni' or 'euclidean'");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  const auto dir = fs::path(path).parent_path();
  return parse_config(load_json(path), dir.empty() ? "." : dir.string());
}

LabeledDataset load_dataset(const DatasetSource& source, const std::string& base_dir) {
  LabeledDataset ds;
  if (!source.synthetic.empty()) {
    ds = make_synthetic_mixture(three_normal_preset(), source.synthetic_n, source.synthetic_seed);
  } else {
    fs::path p(source.csv);
    if (p.is_relative() && fs::exists(fs::path(base_dir) / p)) p = fs::path(base_dir) / p;
    LabelColumn column = source.label_column;
    if (!source.has_header) column = std::stoi(source.label_column);
    ds = load_csv(p.string(), column, CsvOptions{source.has_header, ','});
  }
  if (source.subsample > 0 && source.subsample < ds.size()) {
    std::vector<int> idx(static_cast<std::size_t>(ds.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(source.synthetic_seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(source.subsample));
    std::sort(idx.begin(), idx.end());
    ds = ds.subset(idx);
  }
  return ds;
}

PreparedSplit prepare_split(const LabeledDataset& ds, const SplitSpec& spec, const Preprocessing& pre) {
  PreparedSplit out;
  out.split = split(ds, spec);
  auto& s = out.split;
  if (pre.scale) {
    out.scale = fit_scale(s.train);
    s.train = out.scale->apply(s.train);
    s.validation = out.scale->apply(s.validation);
    s.test = out.scale->apply(s.test);
  }
  if (pre.pca_dim > 0) {
    out.projection = fit_pca(s.train, pre.pca_dim);
    s.train = out.projection->apply(s.train);
    s.validation = out.projection->apply(s.validation);
    s.test = out.projection->apply(s.test);
  }
  return out;
}

MetricMatrix fit_uniform_metric(const LabeledDataset& train, double lambda_cov) {
  const auto models = fit_gaussian_models(train, lambda_cov);
  return uniform_combination(compute_all_local_metrics(train, models));
}

// ---------------------------------------------------------------------------
// Running

namespace {

struct RepeatContext {
  const ExperimentConfig& config;
  const Split& split;
  std::uint64_t seed;
};

MethodRepeat from_tuned(const TunedResult& r, MethodRepeat out) {
  out.ok = true;
  out.value = r.test_error;
  out.selected = r.selected;
  out.timing["tuning"] = r.tuning_seconds;
  out.timing["testing"] = r.testing_seconds;
  return out;
}

MethodRepeat run_method(const MethodSpec& spec, const RepeatContext& ctx, std::optional<Embedding>* embedding) {
  const auto& cfg = ctx.config;
  const auto& train = ctx.split.train;
  const auto& val = ctx.split.validation;
  const auto& test = ctx.split.test;
  const double lambda_cov = cfg.options.lambda_cov;
  MethodRepeat out;
  out.seed = ctx.seed;
  auto t = std::chrono::steady_clock::now();

  auto local_metrics = [&](std::vector<MetricMatrix>& locals) {
    t = std::chrono::steady_clock::now();
    const auto models = fit_gaussian_models(train, lambda_cov);
    locals = compute_all_local_metrics(train, models);
    out.timing["local_metrics"] = since(t);
  };
  auto uniform = [&]() {
    std::vector<MetricMatrix> locals;
    local_metrics(locals);
    t = std::chrono::steady_clock::now();
    MetricMatrix m = uniform_combination(locals);
    out.timing["combination"] = since(t);
    return m;
  };

  switch (spec.kind) {
    case MethodKind::Euclidean:
      return from_tuned(tune_and_test(KnnMethod{MetricMatrix::identity(train.dim()), cfg.grids.k}, train, val, test),
                        out);
    case MethodKind::GlmInt: {
      GlmIntMethod m;
      m.models = fit_gaussian_models(train, lambda_cov);
      out.timing["local_metrics"] = since(t);
      m.k_grid = cfg.grids.k;
      m.lambda_grid = cfg.grids.lambda_int;
      return from_tuned(tune_and_test(m, train, val, test), out);
    }
    case MethodKind::MUni: {
      const MetricMatrix m = uniform();
      return from_tuned(tune_and_test(KnnMethod{m, cfg.grids.k}, train, val, test), out);
    }
    case MethodKind::MUniEnergy: {
      const MetricMatrix m = uniform();
      return from_tuned(tune_and_test(EnergyMethod{m, cfg.grids.k, cfg.grids.beta}, train, val, test), out);
    }
    case MethodKind::MGmm:
    case MethodKind::MKde: {
      DensityWeightedOptions o;
      o.estimator = spec.kind == MethodKind::MKde ? DensityEstimatorKind::Kde : DensityEstimatorKind::Gmm;
      o.max_iter = cfg.options.density_max_iter;
      o.refit_local_metrics = cfg.options.refit_local_metrics;
      o.lambda_cov = lambda_cov;
      o.seed = ctx.seed;
      const auto r = density_weighted_combination(train, val, o);
      out.timing["combination"] = since(t);
      out.selected["fallback_iterations"] = r.fallback_iterations;
      auto res = from_tuned(tune_and_test(KnnMethod{r.metric, cfg.grids.k}, train, val, test), out);
      res.selected["fallback_iterations"] = r.fallback_iterations;
      return res;
    }
    case MethodKind::MklBaseline:
    case MethodKind::MklMetric: {
      std::vector<MetricMatrix> metrics;
      if (spec.kind == MethodKind::MklBaseline) {
        metrics.push_back(MetricMatrix::identity(train.dim()));
      } else {
        std::vector<MetricMatrix> locals;
        local_metrics(locals);
        t = std::chrono::steady_clock::now();
        metrics = regional_metrics(locals, train.features, spec.regions, ctx.seed).metrics;
        out.timing["combination"] = since(t);
      }
      const auto run = mkl_tune_and_test(metrics, train, val, test, cfg.grids.c, cfg.grids.tau, MklOptions{}, ctx.seed);
      return from_tuned(run.result, out);
    }
    case MethodKind::ClusterUni: {
      IterativeClusteringOptions base;
      base.seed = ctx.seed;
      base.restarts = cfg.options.cluster_restarts;
      base.outer_iters = cfg.options.cluster_outer_iters;
      const auto tuned = cluster_transfer_tune(train, val, cfg.grids.cluster_lambda_cov, cfg.grids.cluster_lambda_int,
                                               train.class_count, base);
      out.timing["tuning"] = since(t);
      t = std::chrono::steady_clock::now();
      const auto assigned = assign_to_centers(test.features, tuned.model.clustering.centers, tuned.model.metric);
      out.value = rand_score(assigned, test.labels);
      out.timing["testing"] = since(t);
      out.selected = {{"lambda_cov", tuned.lambda_cov},
                      {"lambda_int", tuned.lambda_int},
                      {"validation_rand", tuned.validation_rand}};
      out.ok = true;
      return out;
    }
    case MethodKind::ClusterEuclidean: {
      const MetricMatrix id = MetricMatrix::identity(train.dim());
      const auto fit = kmeans(train.features, train.class_count, id, ctx.seed, cfg.options.cluster_restarts);
      out.timing["tuning"] = since(t);
      t = std::chrono::steady_clock::now();
      out.value = rand_score(assign_to_centers(test.features, fit.centers, id), test.labels);
      out.timing["testing"] = since(t);
      out.ok = true;
      return out;
    }
    case MethodKind::Isomap: {
      const MetricMatrix m =
          cfg.options.isomap_metric == "m_uni" ? uniform() : MetricMatrix::identity(train.dim());
      t = std::chrono::steady_clock::now();
      auto e = isomap_embed(train.features, m, cfg.options.isomap_neighbors, cfg.options.isomap_dim);
      out.timing["embedding"] = since(t);
      out.value = e.residual_variance;
      out.selected = {{"excluded", e.excluded}};
      out.ok = true;
      if (embedding) *embedding = std::move(e);
      return out;
    }
  }
  throw Error("unhandled method");
}

}  // namespace

Report run_experiment(const ExperimentConfig& config, int threads) {
  if (threads < 1) throw Error("thread count must be positive");
  const auto start = std::chrono::steady_clock::now();
  const LabeledDataset ds = load_dataset(config.dataset, config.base_dir);

  Report report;
  report.name = config.name;
  report.dataset = config.dataset.synthetic.empty() ? config.dataset.csv : config.dataset.synthetic;
  report.points = static_cast<int>(ds.size());
  report.dimension = static_cast<int>(ds.dim());
  report.classes = ds.class_count;
  report.repeats = config.repeats;

  const auto n_methods = config.methods.size();
  const auto n_repeats = static_cast<std::size_t>(config.repeats);
  std::vector<std::vector<MethodRepeat>> results(n_methods, std::vector<MethodRepeat>(n_repeats));
  std::vector<int> first_labels;
  std::optional<Embedding> embedding;

  const int previous = omp_get_max_threads();
  omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(r);
    SplitSpec spec = config.split;
    spec.seed = seed;
    std::optional<PreparedSplit> prepared;
    std::string split_error;
    try {
      prepared = prepare_split(ds, spec, config.preprocessing);
    } catch (const std::exception& e) {
      split_error = e.what();
    }
    for (std::size_t m = 0; m < n_methods; ++m) {
      auto& slot = results[m][static_cast<std::size_t>(r)];
      slot.seed = seed;
      if (!prepared) {
        slot.error = split_error;
        continue;
      }
      try {
        std::optional<Embedding> e;
        slot = run_method(config.methods[m], RepeatContext{config, prepared->split, seed}, r == 0 ? &e : nullptr);
        if (e) {
#pragma omp critical(genmetric_report_embedding)
          {
            embedding = std::move(e);
            first_labels = prepared->split.train.labels;
          }
        }
      } catch (const std::exception& ex) {
        slot = MethodRepeat{};
        slot.seed = seed;
        slot.error = ex.what();
      }
    }
  }
  omp_set_num_threads(previous);

  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodSummary s;
    s.name = config.methods[m].name();
    s.measure = config.methods[m].measure();
    s.repeats = std::move(results[m]);
    std::vector<double> values;
    for (const auto& r : s.repeats) {
      if (r.ok) values.push_back(r.value);
      else ++s.failures;
    }
    if (!values.empty()) {
      const double n = static_cast<double>(values.size());
      s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      s.standard_error = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    }
    report.methods.push_back(std::move(s));
  }
  report.embedding = std::move(embedding);
  report.embedding_labels = std::move(first_labels);
  report.seconds = since(start);
  return report;
}

Json to_json(const Report& r) {
  Json methods = Json::array();
  for (const auto& m : r.methods) {
    Json repeats = Json::array();
    std::map<std::string, double> totals;
    for (const auto& rep : m.repeats) {
      Json item = {{"seed", rep.seed}, {"ok", rep.ok}};
      if (rep.ok) {
        item["value"] = rep.value;
        item["selected"] = rep.selected;
      } else {
        item["error"] = rep.error;
      }
      repeats.push_back(std::move(item));
      for (const auto& [phase, secs] : rep.timing) totals[phase] += secs;
    }
    methods.push_back({{"name", m.name},
                       {"measure", m.measure},
                       {"mean", m.mean},
                       {"standard_error", m.standard_error},
                       {"successful_repeats", static_cast<int>(m.repeats.size()) - m.failures},
                       {"failures", m.failures},
                       {"repeats", repeats},
                       {"timing", totals}});
  }
  return {{"schema_version", 1},
          {"name", r.name},
          {"dataset", {{"source", r.dataset}, {"points", r.points}, {"dimension", r.dimension}, {"classes", r.classes}}},
          {"repeats", r.repeats},
          {"methods", methods},
          {"timing", {{"total", r.seconds}}}};
}

std::string render_table(const Report& r) {
  std::ostringstream out;
  out << r.name << " (" << r.dataset << ", N=" << r.points << ", D=" << r.dimension << ", " << r.repeats
      << " splits)\n";
  std::size_t width = 8;
  for (const auto& m : r.methods) width = std::max(width, m.name.size());
  out << std::left << std::setw(static_cast<int>(width) + 2) << "method" << "result\n";
  for (const auto& m : r.methods) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << m.name;
    if (m.failures == static_cast<int>(m.repeats.size())) {
      out << "failed\n";
      continue;
    }
    out << std::fixed;
    if (m.measure == "error") {
      out << std::setprecision(2) << 100.0 * m.mean << " \xC2\xB1 " << 100.0 * m.standard_error << "  (error %)";
    } else {
      out << std::setprecision(3) << m.mean << " \xC2\xB1 " << m.standard_error << "  (" << m.measure << ")";
    }
    if (m.failures > 0) out << "  [" << m.failures << " failed]";
    out << '\n';
  }
  return out.str();
}

void write_report(const Report& r, const std::string& dir) {
  fs::create_directories(dir);
  save_json((fs::path(dir) / "report.json").string(), to_json(r));
  {
    std::ofstream csv(fs::path(dir) / "report.csv");
    if (!csv) throw Error("cannot write report.csv in " + dir);
    csv.precision(17);
    csv << "method,measure,repeat,seed,ok,value\n";
    for (const auto& m : r.methods) {
      for (std::size_t i = 0; i < m.repeats.size(); ++i) {
        const auto& rep = m.repeats[i];
        csv << m.name << ',' << m.measure << ',' << i << ',' << rep.seed << ',' << (rep.ok ? 1 : 0) << ',';
        if (rep.ok) csv << rep.value;
        csv << '\n';
      }
    }
  }
  {
    std::ofstream table(fs::path(dir) / "table.txt");
    if (!table) throw Error("cannot write table.txt in " + dir);
    table << render_table(r);
  }
  if (r.embedding) write_embedding_csv((fs::path(dir) / "embedding.csv").string(), *r.embedding, r.embedding_labels);
}

// ---------------------------------------------------------------------------

RankTable average_ranks(const std::vector<std::string>& datasets,
                        const std::vector<std::map<std::string, double>>& scores, bool lower_is_better) {
  if (datasets.size() != scores.size()) throw Error("ranking: one score map per dataset required");
  if (scores.empty()) throw Error("ranking needs at least one dataset");
  RankTable t;
  t.datasets = datasets;
  for (const auto& [name, v] : scores.front()) {
    const bool everywhere =
        std::all_of(scores.begin(), scores.end(), [&](const auto& s) { return s.count(name) > 0; });
    if (everywhere) t.methods.push_back(name);
  }
  if (t.methods.empty()) throw Error("ranking: no method is present for every dataset");
  t.average.assign(t.methods.size(), 0.0);
  for (const auto& s : scores) {
    std::vector<std::size_t> order(t.methods.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) {
      const double v = s.at(t.methods[i]);
      return lower_is_better ? v : -v;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    std::vector<double> ranks(t.methods.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && key(order[j + 1]) == key(order[i])) ++j;
      const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = shared;
      i = j + 1;
    }
    for (std::size_t m = 0; m < ranks.size(); ++m) t.average[m] += ranks[m] / static_cast<double>(scores.size());
    t.ranks.push_back(std::move(ranks));
  }
  return t;
}

RankTable rank_reports(const std::vector<Json>& reports) {
  std::vector<std::string> names;
  std::vector<std::map<std::string, double>> scores;
  for (const auto& r : reports) {
    std::string label = r.value("name", std::string{"dataset"});
    if (r.contains("dataset")) label += " [" + r.at("dataset").value("source", std::string{}) + "]";
    names.push_back(label);
    std::map<std::string, double> s;
    for (const auto& m : r.at("methods")) {
      if (m.at("measure") != "error" || m.at("successful_repeats").get<int>() == 0) continue;
      s[m.at("name").get<std::string>()] = m.at("mean").get<double>();
    }
    scores.push_back(std::move(s));
  }
  return average_ranks(names, scores, true);
}

std::string render_rank_table(const RankTable& t) {
  std::ostringstream out;
  std::size_t width = 8;
  for (const auto& m : t.methods) width = std::max(width, m.size());
  out << std::left << std::setw(static_cast<int>(width) + 2) << "method";
  for (std::size_t d = 0; d < t.datasets.size(); ++d) out << std::setw(8) << ("D" + std::to_string(d + 1));
  out << "avg. rank\n";
  for (std::size_t m = 0; m < t.methods.size(); ++m) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << t.methods[m] << std::fixed << std::setprecision(2);
    for (const auto& row : t.ranks) out << std::setw(8) << row[m];
    out << t.average[m] << '\n';
  }
  for (std::size_t d = 0; d < t.datasets.size(); ++d) out << "D" << d + 1 << ": " << t.datasets[d] << '\n';
  return out.str();
}

int default_threads() {
  if (const char* env = std::getenv("GENMETRIC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace genmetric
