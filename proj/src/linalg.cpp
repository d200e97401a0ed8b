#include "genmetric/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "genmetric/error.hpp"

namespace genmetric::linalg {

SymmetricEigen eigh(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigen-decomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

double max_abs(const Eigen::MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

double relative_asymmetry(const Eigen::MatrixXd& a) {
  const double asym = max_abs(a - a.transpose());
  const double scale = max_abs(a);
  return scale > 0.0 ? asym / scale : asym;
}

Eigen::MatrixXd compose(const Eigen::MatrixXd& vectors, const Eigen::VectorXd& values) {
  return vectors * values.asDiagonal() * vectors.transpose();
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m, double tol) {
  auto [values, vectors] = eigh(symmetrize(m));
  const double top = values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -tol * top) throw Error("matrix square root: negative eigenvalue " + std::to_string(values(i)));
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return symmetrize(compose(vectors, values));
}

double log_det_sym(const Eigen::MatrixXd& m) {
  const auto e = eigh(symmetrize(m));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    if (e.values(i) <= 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(e.values(i));
  }
  return acc;
}

Eigen::MatrixXd det_normalize(const Eigen::MatrixXd& m) {
  auto [values, vectors] = eigh(symmetrize(m));
  double mean_log = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) <= 0.0) throw Error("det_normalize: matrix is not positive definite");
    mean_log += std::log(values(i));
  }
  mean_log /= static_cast<double>(values.size());
  const double shift = std::exp(-mean_log);
  values *= shift;
  return symmetrize(compose(vectors, values));
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of empty sequence");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace genmetric::linalg
