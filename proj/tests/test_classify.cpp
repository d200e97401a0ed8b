#include <doctest.h>

#include <algorithm>
#include <tuple>

#include "genmetric/classify.hpp"
#include "genmetric/error.hpp"
#include "genmetric/global_metric.hpp"
#include "support.hpp"

using namespace genmetric;

namespace {

// Sort (distance, index), vote, break ties by summed distance then class.
int brute_knn(const LabeledDataset& train, const Eigen::MatrixXd& m, const Eigen::VectorXd& q, int k) {
  std::vector<std::pair<double, int>> d;
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    const Eigen::VectorXd diff = train.point(i) - q;
    d.emplace_back(diff.dot(m * diff), static_cast<int>(i));
  }
  std::sort(d.begin(), d.end());
  std::vector<std::tuple<int, double, int>> score(static_cast<std::size_t>(train.class_count));
  for (int c = 0; c < train.class_count; ++c) score[static_cast<std::size_t>(c)] = {0, 0.0, c};
  for (int j = 0; j < k; ++j) {
    auto& s = score[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(d[static_cast<std::size_t>(j)].second)])];
    std::get<0>(s) -= 1;
    std::get<1>(s) += d[static_cast<std::size_t>(j)].first;
  }
  return std::get<2>(*std::min_element(score.begin(), score.end()));
}

LabeledDataset line(std::vector<double> xs, std::vector<double> ys) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = xs[i];
  return make_dataset(x, ys);
}

}  // namespace

TEST_CASE("mahalanobis distance is the squared quadratic form") {
  MetricMatrix m = MetricMatrix::global(Eigen::Vector2d(4.0, 1.0).asDiagonal(), "X");
  CHECK(mahalanobis_distance(m, Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0)) == doctest::Approx(5.0));
  CHECK_THROWS_AS(mahalanobis_distance(m, Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(0, 0, 0)), Error);
}

TEST_CASE("kNN agrees with a brute-force oracle") {
  const auto train = testing_support::blobs(20, 3, 3, 1.5, 6);
  std::mt19937_64 rng(7);
  const auto m = MetricMatrix::global(testing_support::random_spd(3, rng), "X");
  const Eigen::MatrixXd q = 2.0 * testing_support::random_matrix(100, 3, rng);
  for (int k : {1, 2, 4, 7}) {
    const auto pred = knn_predict_batch(train, KnnConfig{k, m, TieRule::SumDistanceThenIndex}, q);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      CHECK(pred[static_cast<std::size_t>(i)] == brute_knn(train, m.matrix, q.row(i).transpose(), k));
    }
  }
  CHECK_THROWS_AS(knn_predict_batch(train, KnnConfig{0, m}, q), Error);
  CHECK_THROWS_AS(knn_predict_batch(train, KnnConfig{61, m}, q), Error);
}

TEST_CASE("vote ties go to the nearer class, then the lower index") {
  const auto train = line({0.0, 1.0}, {0, 1});
  const KnnConfig cfg{2, MetricMatrix::identity(1)};
  CHECK(knn_predict(train, cfg, Eigen::VectorXd::Constant(1, 0.4)) == 0);
  CHECK(knn_predict(train, cfg, Eigen::VectorXd::Constant(1, 0.6)) == 1);
  CHECK(knn_predict(train, cfg, Eigen::VectorXd::Constant(1, 0.5)) == 0);
}

TEST_CASE("class energies by hand") {
  const Eigen::Vector4d dist(1.0, 2.0, 3.0, 4.0);
  const std::vector<int> labels{0, 0, 1, 1};
  // k=1, margin 0.5: E_0 = 1 + max(0, 0.5+1-3) = 1; E_1 = 3 + max(0, 0.5+3-1) = 5.5.
  auto e = class_energies(dist, labels, 2, 1, 0.5);
  CHECK(e[0] == doctest::Approx(1.0));
  CHECK(e[1] == doctest::Approx(5.5));
  // k=2, margin 2: E_0 = 3 + [max(0,2+1-3)+max(0,2+1-4)+max(0,2+2-3)+max(0,2+2-4)] = 3 + 1 = 4.
  e = class_energies(dist, labels, 2, 2, 2.0);
  CHECK(e[0] == doctest::Approx(4.0));
  // E_1 = 7 + [(2+3-1)+(2+3-2)+(2+4-1)+(2+4-2)] = 7 + 16 = 23.
  CHECK(e[1] == doctest::Approx(23.0));
  CHECK_THROWS_AS(class_energies(dist, labels, 2, 3, 0.0), Error);

  const auto train = line({0.0, 0.2, 3.0, 3.1}, {0, 0, 1, 1});
  EnergyConfig cfg{1, 0.1, MetricMatrix::identity(1)};
  CHECK(energy_predict(train, cfg, Eigen::VectorXd::Constant(1, 0.3)) == 0);
  CHECK(energy_predict(train, cfg, Eigen::VectorXd::Constant(1, 2.5)) == 1);
  cfg.margin = -1.0;
  CHECK_THROWS_AS(energy_predict(train, cfg, Eigen::VectorXd::Constant(1, 0.3)), Error);
}

TEST_CASE("margin candidates from brute-force gaps") {
  const auto train = testing_support::blobs(8, 2, 2, 2.0, 14);
  std::mt19937_64 rng(15);
  const auto m = MetricMatrix::global(testing_support::random_spd(2, rng), "X");
  std::vector<double> gaps;
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    double same = 1e300, other = 1e300;
    for (Eigen::Index j = 0; j < train.size(); ++j) {
      if (i == j) continue;
      const double d = mahalanobis_distance(m, train.point(i), train.point(j));
      auto& slot = train.labels[static_cast<std::size_t>(i)] == train.labels[static_cast<std::size_t>(j)] ? same : other;
      slot = std::min(slot, d);
    }
    gaps.push_back(other - same);
  }
  std::sort(gaps.begin(), gaps.end());
  const double gamma0 = 0.5 * (gaps[7] + gaps[8]);
  const auto mc = margin_candidates(train, m, {0.5, 2.0});
  CHECK(mc.gamma0 == doctest::Approx(gamma0).epsilon(1e-9));
  CHECK(mc.margins[0] == doctest::Approx(std::max(0.0, 0.5 * gamma0)).epsilon(1e-9));
  CHECK(mc.margins[1] == doctest::Approx(std::max(0.0, 2.0 * gamma0)).epsilon(1e-9));
}

TEST_CASE("evaluate_error") {
  CHECK(evaluate_error(std::vector<int>{0, 1, 1, 0}, std::vector<int>{0, 1, 0, 0}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(evaluate_error(std::vector<int>{}, std::vector<int>{}), Error);
  CHECK_THROWS_AS(evaluate_error(std::vector<int>{1}, std::vector<int>{1, 2}), Error);
}

TEST_CASE("grid ties resolve to the smallest k") {
  const auto train = testing_support::blobs(20, 2, 2, 20.0, 3);
  const auto val = testing_support::blobs(5, 2, 2, 20.0, 4);
  const auto test = testing_support::blobs(5, 2, 2, 20.0, 5);
  const auto r = tune_and_test(KnnMethod{MetricMatrix::identity(2), {7, 3, 1, 5}}, train, val, test);
  CHECK(r.validation_error == 0.0);
  CHECK(r.selected.at("k") == 1.0);
  CHECK(r.grid.size() == 4);
  CHECK(r.test_error == 0.0);
  CHECK(r.test_predictions == test.labels);
  CHECK(r.seconds >= r.tuning_seconds);
}

TEST_CASE("energy tuning selects smaller beta on ties") {
  const auto train = testing_support::blobs(20, 2, 2, 20.0, 3);
  const auto val = testing_support::blobs(5, 2, 2, 20.0, 4);
  const auto r = tune_and_test(EnergyMethod{MetricMatrix::identity(2), {1, 3}, {0.5, 1.0}}, train, val, val);
  CHECK(r.selected.at("k") == 1.0);
  CHECK(r.selected.at("beta") == 0.5);
  CHECK(r.selected.count("gamma0") == 1);
}

TEST_CASE("GLM-INT at lambda 1 is Euclidean kNN") {
  const auto train = testing_support::blobs(20, 3, 3, 1.5, 21);
  const auto queries = testing_support::blobs(10, 3, 3, 1.5, 22);
  GlmIntMethod m{fit_gaussian_models(train), {1, 3, 5}, {0.0, 1.0}};
  const auto preds = glm_int_predictions(train, m, queries.features);
  REQUIRE(preds.size() == 2);
  for (std::size_t ki = 0; ki < 3; ++ki) {
    const int k = m.k_grid[ki];
    CHECK(preds[1][ki] == knn_predict_batch(train, KnnConfig{k, MetricMatrix::identity(3)}, queries.features));
  }
  // λ = 0: each query uses its own local metric.
  for (Eigen::Index q = 0; q < queries.size(); ++q) {
    const auto phi = phi_matrix(queries.point(q), m.models);
    const MetricMatrix local = solve_local_metric(phi.matrix);
    CHECK(preds[0][0][static_cast<std::size_t>(q)] == brute_knn(train, local.matrix, queries.point(q), 1));
  }
  const auto r = tune_and_test(m, train, queries, queries);
  CHECK(r.selected.count("lambda_int") == 1);
}

TEST_CASE("decisions are invariant to metric scaling and the L rewrite") {
  const auto train = testing_support::blobs(30, 3, 4, 1.5, 41);
  const auto uni = uniform_combination(compute_all_local_metrics(train, fit_gaussian_models(train)));
  std::mt19937_64 rng(42);
  const Eigen::MatrixXd q = 2.0 * testing_support::random_matrix(500, 4, rng);
  MetricMatrix scaled = uni;
  scaled.matrix *= 3.7;

  const auto t = metric_sqrt_transform(uni);
  LabeledDataset z_train = train;
  z_train.features = t.apply(train.features);
  for (int k : {1, 5}) {
    const auto base = knn_predict_batch(train, KnnConfig{k, uni}, q);
    CHECK(knn_predict_batch(train, KnnConfig{k, scaled}, q) == base);
    CHECK(knn_predict_batch(z_train, KnnConfig{k, MetricMatrix::identity(4)}, t.apply(q)) == base);
  }
}
