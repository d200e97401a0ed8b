#pragma once

// Data-parallel hot loops. Each kernel exists twice with identical
// signatures: `serial` is the reference used by tests, `parallel` is the
// OpenMP version the library calls. Outputs are written to pre-assigned
// slots, so both produce bitwise-identical results for any thread count.

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "genmetric/generative.hpp"
#include "genmetric/local_metric.hpp"

namespace genmetric {

/// Undirected graph as adjacency lists of (neighbor, edge length).
using AdjacencyList = std::vector<std::vector<std::pair<int, double>>>;

namespace serial {

std::vector<MetricMatrix> local_metrics(const Eigen::MatrixXd& x, const GenerativeModelSet& ms, double eps_rel);

/// out(q, r) = (x_q − y_r)ᵀ M (x_q − y_r)
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference,
                                  const Eigen::MatrixXd& metric);

/// out(q, r) = exp(−(x_q − y_r)ᵀ M (x_q − y_r) / σ²)
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference,
                         const Eigen::MatrixXd& metric, double sigma2);

/// Dijkstra from every source; unreachable pairs are +inf.
Eigen::MatrixXd shortest_paths(const AdjacencyList& graph);

}  // namespace serial

namespace parallel {

std::vector<MetricMatrix> local_metrics(const Eigen::MatrixXd& x, const GenerativeModelSet& ms, double eps_rel);

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference,
                                  const Eigen::MatrixXd& metric);

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference,
                         const Eigen::MatrixXd& metric, double sigma2);

Eigen::MatrixXd shortest_paths(const AdjacencyList& graph);

}  // namespace parallel

namespace detail {

MetricMatrix local_metric_at(const Eigen::VectorXd& x, const GenerativeModelSet& ms, double eps_rel, int index);

inline double quad_form(const Eigen::MatrixXd& metric, const Eigen::VectorXd& diff) {
  return diff.dot(metric * diff);
}

void dijkstra(const AdjacencyList& graph, int source, double* row);

}  // namespace detail

}  // namespace genmetric
