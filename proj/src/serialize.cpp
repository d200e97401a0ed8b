#include "genmetric/serialize.hpp"

#include <fstream>

#include "genmetric/error.hpp"

namespace genmetric {

Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw Error("matrix must be a JSON array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw Error("matrix rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw Error("vector must be a JSON array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Json to_json(const ScaleParams& p) { return {{"min", to_json(p.min)}, {"max", to_json(p.max)}}; }

ScaleParams scale_from_json(const Json& j) { return {vector_from_json(j.at("min")), vector_from_json(j.at("max"))}; }

Json to_json(const ProjectionParams& p) {
  return {{"mean", to_json(p.mean)},
          {"components", to_json(p.components)},
          {"explained_variance", to_json(p.explained_variance)}};
}

ProjectionParams projection_from_json(const Json& j) {
  ProjectionParams p;
  p.mean = vector_from_json(j.at("mean"));
  p.components = matrix_from_json(j.at("components"));
  p.explained_variance = vector_from_json(j.at("explained_variance"));
  return p;
}

Json to_json(const GenerativeModelSet& ms) {
  Json models = Json::array();
  for (std::size_t i = 0; i < ms.models.size(); ++i) {
    const auto& g = ms.models[i];
    models.push_back({{"class", ms.class_ids[i]},
                      {"prior", g.prior},
                      {"mean", to_json(g.mean)},
                      {"covariance", to_json(g.covariance)}});
  }
  return {{"regularizer", ms.regularizer}, {"models", models}};
}

GenerativeModelSet models_from_json(const Json& j) {
  GenerativeModelSet ms;
  ms.regularizer = j.at("regularizer").get<double>();
  for (const auto& m : j.at("models")) {
    ms.models.push_back(GaussianModel::from_moments(vector_from_json(m.at("mean")), matrix_from_json(m.at("covariance")),
                                                    m.at("prior").get<double>()));
    ms.class_ids.push_back(m.at("class").get<int>());
  }
  return ms;
}

Json to_json(const MetricMatrix& m) {
  return {{"matrix", to_json(m.matrix)},
          {"provenance", to_string(m.provenance)},
          {"index", m.index},
          {"method", m.method},
          {"det_normalized", m.det_normalized},
          {"degenerate", m.degenerate}};
}

MetricMatrix metric_from_json(const Json& j) {
  MetricMatrix m;
  m.matrix = matrix_from_json(j.at("matrix"));
  if (m.matrix.rows() != m.matrix.cols()) throw Error("metric matrix must be square");
  m.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  m.index = j.value("index", -1);
  m.method = j.value("method", std::string{});
  m.det_normalized = j.value("det_normalized", false);
  m.degenerate = j.value("degenerate", false);
  return m;
}

Json to_json(const BaseKernel& bk) {
  return {{"metric_index", bk.metric_index}, {"tau", bk.tau}, {"sigma2", bk.sigma2}};
}

Json to_json(const MklModel& m) {
  return {{"alpha", to_json(m.alpha)},
          {"beta", to_json(m.beta)},
          {"bias", m.bias},
          {"C", m.c},
          {"support", m.support},
          {"objective_history", m.objective_history},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"svm_converged", m.svm_converged}};
}

Json to_json(const MklClassifier& c, const std::vector<BaseKernel>& bank) {
  Json kernels = Json::array();
  Json metrics = Json::array();
  for (const auto& bk : bank) {
    kernels.push_back(to_json(bk));
    if (bk.metric_index == static_cast<int>(metrics.size())) metrics.push_back(to_json(bk.metric));
  }
  Json models = Json::array();
  for (const auto& m : c.models) models.push_back(to_json(m));
  return {{"class_count", c.class_count}, {"metrics", metrics}, {"kernels", kernels}, {"models", models}};
}

Json to_json(const TunedResult& r) {
  Json grid = Json::array();
  for (const auto& row : r.grid) grid.push_back({{"params", row.params}, {"validation_error", row.validation_error}});
  return {{"selected", r.selected},
          {"validation_error", r.validation_error},
          {"test_error", r.test_error},
          {"grid", grid}};
}

Eigen::MatrixXd FittedMetric::preprocess(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = scale ? scale->apply(x) : x;
  if (projection) out = projection->apply(out);
  return out;
}

LabeledDataset FittedMetric::preprocess(const LabeledDataset& ds) const {
  LabeledDataset out = ds;
  out.features = preprocess(ds.features);
  if (projection) out.names.clear();
  return out;
}

Json to_json(const FittedMetric& f) {
  Json j = {{"schema_version", 1}, {"metric", to_json(f.metric)}, {"source", f.source}};
  j["scale"] = f.scale ? to_json(*f.scale) : Json(nullptr);
  j["projection"] = f.projection ? to_json(*f.projection) : Json(nullptr);
  return j;
}

FittedMetric fitted_metric_from_json(const Json& j) {
  if (j.value("schema_version", 0) != 1) throw Error("unsupported metric file schema version");
  FittedMetric f;
  f.metric = metric_from_json(j.at("metric"));
  f.source = j.value("source", std::string{});
  if (j.contains("scale") && !j.at("scale").is_null()) f.scale = scale_from_json(j.at("scale"));
  if (j.contains("projection") && !j.at("projection").is_null()) f.projection = projection_from_json(j.at("projection"));
  return f;
}

void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace genmetric
