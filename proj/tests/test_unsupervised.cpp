#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "genmetric/error.hpp"
#include "genmetric/global_metric.hpp"
#include "genmetric/unsupervised.hpp"
#include "support.hpp"

using namespace genmetric;

namespace {

double brute_rand(const std::vector<int>& a, const std::vector<int>& b) {
  double agree = 0.0, total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      agree += (a[i] == a[j]) == (b[i] == b[j]);
      total += 1.0;
    }
  return agree / total;
}

// All set partitions of n items as restricted growth strings.
std::vector<std::vector<int>> partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int i, int top) -> void {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= top + 1; ++v) {
      cur[static_cast<std::size_t>(i)] = v;
      self(self, i + 1, std::max(top, v));
    }
  };
  cur[0] = 0;
  rec(rec, 1, 0);
  return out;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[static_cast<std::size_t>(a)] < v[static_cast<std::size_t>(b)]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[static_cast<std::size_t>(idx[i])] = static_cast<double>(i);
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const Eigen::Map<const Eigen::ArrayXd> x(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::ArrayXd> y(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::ArrayXd xc = x - x.mean(), yc = y - y.mean();
  return (xc * yc).sum() / std::sqrt((xc * xc).sum() * (yc * yc).sum());
}

}  // namespace

TEST_CASE("rand score examples") {
  CHECK(rand_score({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(1.0 / 3.0));
  CHECK(rand_score({0, 1, 2}, {0, 1, 2}) == 1.0);
  CHECK(rand_score({0, 0, 1, 2}, {5, 5, 9, 7}) == 1.0);
  CHECK_THROWS_AS(rand_score({0, 1}, {0}), Error);
  CHECK_THROWS_AS(rand_score({0}, {0}), Error);
}

TEST_CASE("rand score equals brute force on every pair of partitions") {
  for (int n = 2; n <= 5; ++n) {
    const auto all = partitions(n);
    for (const auto& a : all)
      for (const auto& b : all) {
        const double r = rand_score(a, b);
        CHECK(r == doctest::Approx(brute_rand(a, b)).epsilon(1e-15));
        CHECK(r == rand_score(b, a));
      }
  }
  CHECK(partitions(5).size() == 52);
}

TEST_CASE("k-means with one center and with one center per point") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = testing_support::random_matrix(12, 3, rng);
  const auto m = MetricMatrix::global(testing_support::random_spd(3, rng), "X");
  const auto one = kmeans(x, 1, m, 7);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  CHECK((one.centers.row(0) - mean).norm() < 1e-12);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < 12; ++i) {
    const Eigen::VectorXd d = x.row(i) - mean;
    inertia += d.dot(m.matrix * d);
  }
  CHECK(one.inertia == doctest::Approx(inertia).epsilon(1e-10));

  const auto all = kmeans(x, 12, m, 7);
  CHECK(all.inertia == doctest::Approx(0.0));
  std::vector<int> sorted = all.assignments;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());

  CHECK_THROWS_AS(kmeans(x, 13, m, 7), Error);
  CHECK_THROWS_AS(kmeans(x, 0, m, 7), Error);
}

TEST_CASE("k-means separates two blobs") {
  const auto ds = testing_support::blobs(25, 2, 2, 10.0, 3);
  const auto r = kmeans(ds.features, 2, MetricMatrix::identity(2), 11);
  // Best of the two labelings.
  std::vector<int> flipped(r.assignments);
  for (auto& v : flipped) v = 1 - v;
  CHECK((r.assignments == ds.labels || flipped == ds.labels));
  for (std::size_t i = 1; i < r.inertia_history.size(); ++i) CHECK(r.inertia_history[i] <= r.inertia_history[i - 1]);
  CHECK(r.inertia == doctest::Approx(r.inertia_history.back()));
  CHECK(assign_to_centers(ds.features, r.centers, r.metric) == r.assignments);
}

TEST_CASE("k-means is deterministic per seed") {
  const auto ds = testing_support::blobs(20, 3, 3, 2.0, 4);
  const auto a = kmeans(ds.features, 3, MetricMatrix::identity(3), 5);
  const auto b = kmeans(ds.features, 3, MetricMatrix::identity(3), 5);
  CHECK(a.assignments == b.assignments);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("Mahalanobis k-means equals Euclidean k-means on transformed data") {
  const auto ds = testing_support::blobs(20, 3, 3, 2.0, 8);
  std::mt19937_64 rng(9);
  const auto m = MetricMatrix::global(testing_support::random_spd(3, rng), "X");
  const auto t = metric_sqrt_transform(m);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = kmeans(ds.features, 3, m, seed);
    const auto b = kmeans(t.apply(ds.features), 3, MetricMatrix::identity(3), seed);
    CHECK(a.assignments == b.assignments);
    CHECK(a.inertia == doctest::Approx(b.inertia).epsilon(1e-9));
  }
}

TEST_CASE("iterative metric k-means edge rules") {
  const auto ds = testing_support::blobs(20, 3, 3, 12.0, 2);
  IterativeClusteringOptions opt;
  opt.seed = 3;
  const auto one = iterative_metric_kmeans(ds.features, 1, opt);
  CHECK(one.metric.degenerate);
  CHECK(one.metric.matrix.isIdentity());

  // Well-separated isotropic blobs are a fixed point.
  const auto fixed = iterative_metric_kmeans(ds.features, 3, opt);
  CHECK(fixed.stable);
  CHECK(fixed.rounds <= 2);
  const auto euclid = kmeans(ds.features, 3, MetricMatrix::identity(3), 3);
  CHECK(rand_score(fixed.clustering.assignments, euclid.assignments) == 1.0);
  CHECK(rand_score(fixed.clustering.assignments, ds.labels) == 1.0);
  check_metric(fixed.metric);

  opt.outer_iters = 0;
  CHECK_THROWS_AS(iterative_metric_kmeans(ds.features, 3, opt), Error);
}

TEST_CASE("learned metric helps on anisotropic Gaussians across seeds") {
  // Three classes stacked along y, each stretched along x (variance ratio 10).
  std::vector<MixtureComponent> comps;
  const Eigen::MatrixXd cov = Eigen::Vector2d(3.0, 0.3).asDiagonal();
  for (int c = 0; c < 3; ++c) comps.push_back({1.0 / 3.0, Eigen::Vector2d(0.0, 3.0 * c), cov, c});
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto ds = make_synthetic_mixture(comps, 150, 100 + seed);
    IterativeClusteringOptions opt;
    opt.seed = seed;
    opt.restarts = 5;
    const auto learned = iterative_metric_kmeans(ds.features, 3, opt);
    const auto base = kmeans(ds.features, 3, MetricMatrix::identity(2), seed, 5);
    wins += rand_score(learned.clustering.assignments, ds.labels) >= rand_score(base.assignments, ds.labels);
  }
  CHECK(wins >= 24);
}

TEST_CASE("transfer tuning is deterministic and honors single-point grids") {
  const auto train = testing_support::blobs(20, 3, 3, 5.0, 12);
  const auto val = testing_support::blobs(8, 3, 3, 5.0, 13);
  IterativeClusteringOptions base;
  base.seed = 4;
  const auto a = cluster_transfer_tune(train, val, {1e-3, 1e-2}, {0.0, 0.5}, 3, base);
  const auto b = cluster_transfer_tune(train, val, {1e-3, 1e-2}, {0.0, 0.5}, 3, base);
  CHECK(a.grid.size() == 4);
  CHECK(a.lambda_cov == b.lambda_cov);
  CHECK(a.lambda_int == b.lambda_int);
  CHECK(a.validation_rand == b.validation_rand);
  // All settings tie on easy data, so the smallest values win.
  CHECK(a.lambda_int == 0.0);
  CHECK(a.lambda_cov == 1e-3);

  const auto single = cluster_transfer_tune(train, val, {1e-2}, {0.25}, 3, base);
  CHECK(single.grid.size() == 1);
  CHECK(single.lambda_int == 0.25);
  CHECK(single.validation_rand == single.grid.front().validation_rand);
  CHECK_THROWS_AS(cluster_transfer_tune(train, val, {}, {0.0}, 3, base), Error);
}

TEST_CASE("isomap on three collinear points") {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  const auto e = isomap_embed(x, MetricMatrix::identity(1), 2, 1);
  REQUIRE(e.coordinates.rows() == 3);
  std::vector<double> d;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) d.push_back(std::abs(e.coordinates(i, 0) - e.coordinates(j, 0)));
  std::sort(d.begin(), d.end());
  CHECK(std::abs(d[0] - 1.0) < 1e-8);
  CHECK(std::abs(d[1] - 1.0) < 1e-8);
  CHECK(std::abs(d[2] - 2.0) < 1e-8);
  CHECK(std::abs(e.coordinates.col(0).mean()) < 1e-8);
  CHECK(e.excluded == 0);

  // Only one positive eigenvalue exists.
  CHECK_THROWS_AS(classical_mds(e.geodesics, 2), Error);
}

TEST_CASE("isomap recovers a Euclidean configuration") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = testing_support::random_matrix(15, 2, rng);
  const auto e = isomap_embed(x, MetricMatrix::identity(2), 14, 2);
  CHECK(e.residual_variance < 1e-8);
  CHECK(e.coordinates.colwise().mean().norm() < 1e-8);
}

TEST_CASE("isomap preserves order along a noisy arc") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.01);
  const int n = 60;
  Eigen::MatrixXd x(n, 2);
  std::vector<double> arc;
  for (int i = 0; i < n; ++i) {
    const double t = 1.5 * M_PI * i / (n - 1);
    x(i, 0) = std::cos(t) + noise(rng);
    x(i, 1) = std::sin(t) + noise(rng);
    arc.push_back(t);
  }
  const auto e = isomap_embed(x, MetricMatrix::identity(2), 4, 1);
  REQUIRE(e.kept.size() == static_cast<std::size_t>(n));
  std::vector<double> coord(e.kept.size());
  for (std::size_t i = 0; i < coord.size(); ++i) coord[i] = e.coordinates(static_cast<Eigen::Index>(i), 0);
  CHECK(std::abs(pearson(ranks(coord), ranks(arc))) > 0.95);

  // Geodesics obey the triangle inequality.
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int t = 0; t < 500; ++t) {
    const int i = pick(rng), j = pick(rng), k = pick(rng);
    CHECK(e.geodesics(i, k) <= e.geodesics(i, j) + e.geodesics(j, k) + 1e-12);
  }
}

TEST_CASE("isomap keeps the largest component") {
  Eigen::MatrixXd x(10, 1);
  x << 0, 1, 2, 3, 4, 5, 100, 101, 102, 103;
  const auto e = isomap_embed(x, MetricMatrix::identity(1), 2, 1);
  CHECK(e.excluded == 4);
  CHECK(e.kept == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(e.geodesics.rows() == 6);
  CHECK_THROWS_AS(isomap_embed(x, MetricMatrix::identity(1), 10, 1), Error);
}

TEST_CASE("embedding and cluster CSV layout") {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  const auto e = isomap_embed(x, MetricMatrix::identity(1), 2, 1);
  const auto dir = testing_support::temp_dir("unsup_csv");
  write_embedding_csv((dir / "e.csv").string(), e, {0, 1, 1});
  std::ifstream in(dir / "e.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "id,x0,label");
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == 3);

  write_clusters_csv((dir / "c.csv").string(), {1, 0, 1}, {0, 0, 1});
  std::ifstream cin(dir / "c.csv");
  std::getline(cin, header);
  CHECK(header == "id,cluster,label");
}
