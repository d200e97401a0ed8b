#include <cmath>

#include "genmetric/error.hpp"
#include "genmetric/kernels.hpp"

namespace genmetric::serial {

std::vector<MetricMatrix> local_metrics(const Eigen::MatrixXd& x, const GenerativeModelSet& ms, double eps_rel) {
  std::vector<MetricMatrix> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = detail::local_metric_at(x.row(i).transpose(), ms, eps_rel, static_cast<int>(i));
  }
  return out;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference,
                                  const Eigen::MatrixXd& metric) {
  if (queries.cols() != reference.cols() || metric.rows() != queries.cols()) {
    throw Error("squared_distances: dimension mismatch");
  }
  Eigen::MatrixXd out(queries.rows(), reference.rows());
  Eigen::VectorXd diff(queries.cols());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (Eigen::Index r = 0; r < reference.rows(); ++r) {
      diff = (queries.row(q) - reference.row(r)).transpose();
      out(q, r) = detail::quad_form(metric, diff);
    }
  }
  return out;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference,
                         const Eigen::MatrixXd& metric, double sigma2) {
  Eigen::MatrixXd out = squared_distances(queries, reference, metric);
  for (Eigen::Index q = 0; q < out.rows(); ++q) {
    for (Eigen::Index r = 0; r < out.cols(); ++r) out(q, r) = std::exp(-out(q, r) / sigma2);
  }
  return out;
}

Eigen::MatrixXd shortest_paths(const AdjacencyList& graph) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  // Row-major so each source writes one contiguous row.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(n, n);
  for (Eigen::Index s = 0; s < n; ++s) detail::dijkstra(graph, static_cast<int>(s), out.row(s).data());
  return out;
}

}  // namespace genmetric::serial
