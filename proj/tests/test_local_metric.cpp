#include <doctest.h>

#include <cmath>

#include "genmetric/error.hpp"
#include "genmetric/global_metric.hpp"
#include "genmetric/linalg.hpp"
#include "genmetric/local_metric.hpp"
#include "support.hpp"

using namespace genmetric;

namespace {

double trace_violation(const MetricMatrix& m, const Eigen::MatrixXd& phi) {
  return std::abs(m.matrix.inverse().cwiseProduct(phi.transpose()).sum()) / phi.norm();
}

}  // namespace

TEST_CASE("indefinite phi: unit determinant, PSD, zero trace") {
  std::mt19937_64 rng(101);
  for (int d : {2, 3, 5, 10}) {
    for (int t = 0; t < 50; ++t) {
      Eigen::MatrixXd phi = testing_support::random_symmetric(d, rng);
      const auto m = solve_local_metric(phi);
      const auto s = spectral_decompose(phi);
      if (s.d_plus == 0 || s.d_minus == 0) continue;
      CHECK(m.matrix.determinant() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(linalg::eigh(m.matrix).values.minCoeff() > 0.0);
      CHECK(trace_violation(m, phi) < 1e-9);
      CHECK(m.det_normalized);
      CHECK(m.provenance == Provenance::Local);
    }
  }
}

TEST_CASE("hand-solved two-dimensional cases") {
  Eigen::MatrixXd phi = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  CHECK(solve_local_metric(phi).matrix.isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-12));

  // diag(2, -1): metric ∝ diag(2, 1), then unit determinant.
  phi = Eigen::Vector2d(2.0, -1.0).asDiagonal();
  const Eigen::MatrixXd expected = Eigen::Vector2d(std::sqrt(2.0), 1.0 / std::sqrt(2.0)).asDiagonal();
  CHECK(solve_local_metric(phi).matrix.isApprox(expected, 1e-12));
}

TEST_CASE("definite phi gives M proportional to ±phi") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd spd = testing_support::random_spd(4, rng);
  const Eigen::MatrixXd expected = spd / std::pow(spd.determinant(), 0.25);
  CHECK(solve_local_metric(spd).matrix.isApprox(expected, 1e-10));
  CHECK(solve_local_metric(-spd).matrix.isApprox(expected, 1e-10));
}

TEST_CASE("null eigenvalues take the geometric mean of the others") {
  const Eigen::MatrixXd phi = Eigen::Vector3d(1.0, -1.0, 0.0).asDiagonal();
  const auto s = spectral_decompose(phi);
  CHECK(s.d_plus == 1);
  CHECK(s.d_minus == 1);
  CHECK(s.d_zero == 1);
  const auto m = solve_local_metric(phi);
  CHECK(m.matrix.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-12));
  CHECK(trace_violation(m, phi) < 1e-12);
}

TEST_CASE("zero phi yields a degenerate identity") {
  const auto m = solve_local_metric(Eigen::MatrixXd::Zero(3, 3));
  CHECK(m.degenerate);
  CHECK(m.matrix.isIdentity());
}

TEST_CASE("asymmetric phi is rejected") {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(2, 2);
  phi(0, 1) = 0.5;
  CHECK_THROWS_AS(solve_local_metric(phi), Error);
}

TEST_CASE("spectral counts and ordering") {
  const Eigen::MatrixXd phi = Eigen::Vector4d(-3.0, 2.0, 1e-14, 5.0).asDiagonal();
  const auto s = spectral_decompose(phi);
  CHECK(s.d_plus == 2);
  CHECK(s.d_minus == 1);
  CHECK(s.d_zero == 1);
  CHECK(s.eigenvalues(0) == doctest::Approx(5.0));
  CHECK(s.eigenvalues(3) == doctest::Approx(-3.0));
}

TEST_CASE("interpolation with the identity") {
  std::mt19937_64 rng(8);
  const auto m = solve_local_metric(testing_support::random_symmetric(3, rng));
  CHECK(interpolate_with_euclidean(m, 0.0).matrix == m.matrix);
  CHECK(interpolate_with_euclidean(m, 1.0).matrix.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-12));
  const auto half = interpolate_with_euclidean(m, 0.5);
  CHECK(half.matrix.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(interpolate_with_euclidean(m, 1.5), Error);
}

TEST_CASE("local metrics from fitted Gaussians zero the local trace") {
  const auto ds = testing_support::blobs(40, 3, 4, 2.0, 19);
  const auto ms = fit_gaussian_models(ds);
  const auto locals = compute_all_local_metrics(ds, ms);
  REQUIRE(locals.size() == 120);
  for (std::size_t i = 0; i < locals.size(); ++i) {
    CHECK(locals[i].index == static_cast<int>(i));
    check_metric(locals[i]);
    const auto phi = phi_matrix(ds.point(static_cast<Eigen::Index>(i)), ms);
    if (!phi.degenerate && phi.matrix.norm() > 0) CHECK(trace_violation(locals[i], phi.matrix) < 1e-8);
  }
}

TEST_CASE("check_metric invariants") {
  MetricMatrix m = MetricMatrix::identity(2);
  CHECK_NOTHROW(check_metric(m));
  m.matrix(0, 0) = 2.0;
  CHECK_THROWS_AS(check_metric(m), Error);  // determinant 2
  m.det_normalized = false;
  CHECK_NOTHROW(check_metric(m));
  m.matrix(1, 1) = -1.0;
  CHECK_THROWS_AS(check_metric(m), Error);
}

TEST_CASE("regional metrics average their members") {
  const auto ds = testing_support::blobs(30, 2, 3, 4.0, 4);
  const auto ms = fit_gaussian_models(ds);
  const auto locals = compute_all_local_metrics(ds, ms);

  const auto one = regional_metrics(locals, ds.features, 1, 0);
  REQUIRE(one.metrics.size() == 1);
  CHECK(one.metrics[0].matrix.isApprox(uniform_combination(locals).matrix, 1e-12));
  CHECK(one.metrics[0].provenance == Provenance::Regional);

  const auto two = regional_metrics(locals, ds.features, 2, 3);
  REQUIRE(two.metrics.size() == 2);
  for (int r = 0; r < 2; ++r) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
    int n = 0;
    for (std::size_t i = 0; i < locals.size(); ++i) {
      if (two.assignment[i] != r) continue;
      sum += locals[i].matrix;
      ++n;
    }
    CHECK(two.metrics[static_cast<std::size_t>(r)].matrix.isApprox(sum / n, 1e-12));
  }
  CHECK_THROWS_AS(regional_metrics(locals, ds.features, 0, 0), Error);
}
