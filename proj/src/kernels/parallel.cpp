#include <cmath>
#include <exception>

#include "genmetric/error.hpp"
#include "genmetric/kernels.hpp"

namespace genmetric::parallel {

std::vector<MetricMatrix> local_metrics(const Eigen::MatrixXd& x, const GenerativeModelSet& ms, double eps_rel) {
  const auto n = x.rows();
  std::vector<MetricMatrix> out(static_cast<std::size_t>(n));
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          detail::local_metric_at(x.row(i).transpose(), ms, eps_rel, static_cast<int>(i));
    } catch (...) {
#pragma omp critical(genmetric_local_metrics)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference,
                                  const Eigen::MatrixXd& metric) {
  if (queries.cols() != reference.cols() || metric.rows() != queries.cols()) {
    throw Error("squared_distances: dimension mismatch");
  }
  const auto nq = queries.rows();
  const auto nr = reference.rows();
  Eigen::MatrixXd out(nq, nr);
#pragma omp parallel
  {
    Eigen::VectorXd diff(queries.cols());
#pragma omp for schedule(static)
    for (Eigen::Index q = 0; q < nq; ++q) {
      for (Eigen::Index r = 0; r < nr; ++r) {
        diff = (queries.row(q) - reference.row(r)).transpose();
        out(q, r) = detail::quad_form(metric, diff);
      }
    }
  }
  return out;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference,
                         const Eigen::MatrixXd& metric, double sigma2) {
  Eigen::MatrixXd out = squared_distances(queries, reference, metric);
  const auto nq = out.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index q = 0; q < nq; ++q) {
    for (Eigen::Index r = 0; r < out.cols(); ++r) out(q, r) = std::exp(-out(q, r) / sigma2);
  }
  return out;
}

Eigen::MatrixXd shortest_paths(const AdjacencyList& graph) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index s = 0; s < n; ++s) detail::dijkstra(graph, static_cast<int>(s), out.row(s).data());
  return out;
}

}  // namespace genmetric::parallel
