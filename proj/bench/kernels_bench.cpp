// Serial reference vs OpenMP kernels. Arguments are problem sizes; the
// parallel runs use the OpenMP default thread count (set OMP_NUM_THREADS).

#include <random>

#include <benchmark/benchmark.h>

#include "genmetric/dataset.hpp"
#include "genmetric/generative.hpp"
#include "genmetric/kernels.hpp"

using namespace genmetric;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Eigen::MatrixXd spd(Eigen::Index d, std::uint64_t seed) {
  const Eigen::MatrixXd a = gaussian(d, d, seed);
  return a * a.transpose() / static_cast<double>(d) + Eigen::MatrixXd::Identity(d, d);
}

struct LocalProblem {
  Eigen::MatrixXd x;
  GenerativeModelSet models;
};

LocalProblem local_problem(int n, int d) {
  std::vector<MixtureComponent> comps;
  for (int c = 0; c < 3; ++c) {
    comps.push_back({1.0 / 3.0, Eigen::VectorXd(gaussian(d, 1, 10 + c).col(0)), spd(d, 20 + c), c});
  }
  const auto ds = make_synthetic_mixture(comps, n, 1);
  return {ds.features, fit_gaussian_models(ds)};
}

AdjacencyList ring_graph(int n, int k) {
  AdjacencyList g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int s = 1; s <= k; ++s) {
      const int j = (i + s) % n;
      g[static_cast<std::size_t>(i)].emplace_back(j, 1.0 + 0.1 * s);
      g[static_cast<std::size_t>(j)].emplace_back(i, 1.0 + 0.1 * s);
    }
  return g;
}

template <bool Parallel>
void local_metrics(benchmark::State& state) {
  const auto p = local_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto out = Parallel ? parallel::local_metrics(p.x, p.models, kDefaultSpectralTolerance)
                        : serial::local_metrics(p.x, p.models, kDefaultSpectralTolerance);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void squared_distances(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd x = gaussian(n, 10, 2);
  const Eigen::MatrixXd m = spd(10, 3);
  for (auto _ : state) {
    Eigen::MatrixXd d = Parallel ? parallel::squared_distances(x, x, m) : serial::squared_distances(x, x, m);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void rbf_gram(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd x = gaussian(n, 10, 4);
  const Eigen::MatrixXd m = spd(10, 5);
  for (auto _ : state) {
    Eigen::MatrixXd g = Parallel ? parallel::rbf_gram(x, x, m, 2.0) : serial::rbf_gram(x, x, m, 2.0);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void shortest_paths(benchmark::State& state) {
  const auto g = ring_graph(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) {
    Eigen::MatrixXd d = Parallel ? parallel::shortest_paths(g) : serial::shortest_paths(g);
    benchmark::DoNotOptimize(d.data());
  }
}

}  // namespace

BENCHMARK(local_metrics<false>)->Name("local_metrics/serial")->Args({600, 10})->Args({600, 40});
BENCHMARK(local_metrics<true>)->Name("local_metrics/parallel")->Args({600, 10})->Args({600, 40});
BENCHMARK(squared_distances<false>)->Name("squared_distances/serial")->Arg(500)->Arg(1000);
BENCHMARK(squared_distances<true>)->Name("squared_distances/parallel")->Arg(500)->Arg(1000);
BENCHMARK(rbf_gram<false>)->Name("rbf_gram/serial")->Arg(500)->Arg(1000);
BENCHMARK(rbf_gram<true>)->Name("rbf_gram/parallel")->Arg(500)->Arg(1000);
BENCHMARK(shortest_paths<false>)->Name("shortest_paths/serial")->Arg(400);
BENCHMARK(shortest_paths<true>)->Name("shortest_paths/parallel")->Arg(400);

BENCHMARK_MAIN();
