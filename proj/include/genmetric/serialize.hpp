#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "genmetric/classify.hpp"
#include "genmetric/dataset.hpp"
#include "genmetric/generative.hpp"
#include "genmetric/kernel_mkl.hpp"
#include "genmetric/local_metric.hpp"

namespace genmetric {

using Json = nlohmann::json;

// Matrices serialize as arrays of rows; vectors as flat arrays. Doubles are
// written with round-trip precision.
Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const Json& j);
Eigen::VectorXd vector_from_json(const Json& j);

Json to_json(const ScaleParams& p);
ScaleParams scale_from_json(const Json& j);

Json to_json(const ProjectionParams& p);
ProjectionParams projection_from_json(const Json& j);

Json to_json(const GenerativeModelSet& ms);
GenerativeModelSet models_from_json(const Json& j);

Json to_json(const MetricMatrix& m);
MetricMatrix metric_from_json(const Json& j);

Json to_json(const BaseKernel& bk);
Json to_json(const MklModel& m);
Json to_json(const MklClassifier& c, const std::vector<BaseKernel>& bank);

Json to_json(const TunedResult& r);

/// A global metric together with the preprocessing it was learned under.
struct FittedMetric {
  MetricMatrix metric;
  std::optional<ScaleParams> scale;
  std::optional<ProjectionParams> projection;
  std::string source;  // dataset path or preset name

  /// Applies scale then projection.
  Eigen::MatrixXd preprocess(const Eigen::MatrixXd& x) const;
  LabeledDataset preprocess(const LabeledDataset& ds) const;
};

Json to_json(const FittedMetric& f);
FittedMetric fitted_metric_from_json(const Json& j);

void save_json(const std::string& path, const Json& j);
Json load_json(const std::string& path);

}  // namespace genmetric
