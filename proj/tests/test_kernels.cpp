#include <doctest.h>

#include <limits>

#include <omp.h>

#include "genmetric/kernels.hpp"
#include "support.hpp"

using namespace genmetric;

namespace {

struct ThreadGuard {
  int saved = omp_get_max_threads();
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

AdjacencyList random_graph(int n, std::mt19937_64& rng) {
  AdjacencyList g(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> w(0.1, 2.0);
  std::bernoulli_distribution edge(0.15);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edge(rng)) {
        const double len = w(rng);
        g[static_cast<std::size_t>(i)].emplace_back(j, len);
        g[static_cast<std::size_t>(j)].emplace_back(i, len);
      }
  return g;
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference for every thread count") {
  ThreadGuard guard;
  const auto ds = testing_support::blobs(30, 3, 4, 2.0, 1);
  const auto ms = fit_gaussian_models(ds);
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd q = testing_support::random_matrix(17, 4, rng);
  const Eigen::MatrixXd m = testing_support::random_spd(4, rng);
  const auto graph = random_graph(40, rng);

  const auto locals = serial::local_metrics(ds.features, ms, kDefaultSpectralTolerance);
  const Eigen::MatrixXd dist = serial::squared_distances(q, ds.features, m);
  const Eigen::MatrixXd gram = serial::rbf_gram(q, ds.features, m, 1.7);
  const Eigen::MatrixXd paths = serial::shortest_paths(graph);

  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    const auto pl = parallel::local_metrics(ds.features, ms, kDefaultSpectralTolerance);
    REQUIRE(pl.size() == locals.size());
    for (std::size_t i = 0; i < pl.size(); ++i) {
      CHECK(pl[i].matrix == locals[i].matrix);
      CHECK(pl[i].index == locals[i].index);
      CHECK(pl[i].degenerate == locals[i].degenerate);
    }
    CHECK(parallel::squared_distances(q, ds.features, m) == dist);
    CHECK(parallel::rbf_gram(q, ds.features, m, 1.7) == gram);
    CHECK(parallel::shortest_paths(graph) == paths);
  }
}

TEST_CASE("squared distances and gram entries from the definition") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = testing_support::random_matrix(5, 3, rng);
  const Eigen::MatrixXd b = testing_support::random_matrix(4, 3, rng);
  const Eigen::MatrixXd m = testing_support::random_spd(3, rng);
  const Eigen::MatrixXd d = serial::squared_distances(a, b, m);
  const Eigen::MatrixXd g = serial::rbf_gram(a, b, m, 0.8);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      const Eigen::VectorXd diff = a.row(i) - b.row(j);
      CHECK(d(i, j) == doctest::Approx(diff.dot(m * diff)).epsilon(1e-12));
      CHECK(g(i, j) == doctest::Approx(std::exp(-diff.dot(m * diff) / 0.8)).epsilon(1e-12));
    }
}

TEST_CASE("shortest paths against Floyd-Warshall") {
  std::mt19937_64 rng(4);
  const auto graph = random_graph(25, rng);
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd fw = Eigen::MatrixXd::Constant(25, 25, inf);
  for (int i = 0; i < 25; ++i) {
    fw(i, i) = 0.0;
    for (const auto& [j, w] : graph[static_cast<std::size_t>(i)]) fw(i, j) = std::min(fw(i, j), w);
  }
  for (int k = 0; k < 25; ++k)
    for (int i = 0; i < 25; ++i)
      for (int j = 0; j < 25; ++j) fw(i, j) = std::min(fw(i, j), fw(i, k) + fw(k, j));
  const Eigen::MatrixXd sp = serial::shortest_paths(graph);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 25; ++j) {
      if (std::isinf(fw(i, j))) {
        CHECK(std::isinf(sp(i, j)));
      } else {
        CHECK(sp(i, j) == doctest::Approx(fw(i, j)).epsilon(1e-12));
      }
    }
}
