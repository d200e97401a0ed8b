#pragma once

// Shared helpers for the unit tests: random matrices and small datasets.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "genmetric/dataset.hpp"

namespace testing_support {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n(rng);
  return m;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index d, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = random_matrix(d, d, rng);
  return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd random_spd(Eigen::Index d, std::mt19937_64& rng, double ridge = 0.5) {
  const Eigen::MatrixXd a = random_matrix(d, d, rng);
  return a * a.transpose() / static_cast<double>(d) + ridge * Eigen::MatrixXd::Identity(d, d);
}

// Gaussian blobs centred at shift·e_c, one per class.
inline genmetric::LabeledDataset blobs(int per_class, int classes, int dim, double shift, std::uint64_t seed,
                                       double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, spread);
  Eigen::MatrixXd x(per_class * classes, dim);
  std::vector<double> y;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const int r = c * per_class + i;
      for (int j = 0; j < dim; ++j) x(r, j) = n(rng);
      x(r, c % dim) += shift;
      y.push_back(c);
    }
  }
  return genmetric::make_dataset(x, y);
}

// Gaussian density written out from the definition.
inline double gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov) {
  const double d = static_cast<double>(x.size());
  const Eigen::VectorXd diff = x - mu;
  const double quad = diff.dot(cov.inverse() * diff);
  return std::exp(-0.5 * quad) / std::sqrt(std::pow(2.0 * M_PI, d) * cov.determinant());
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("genmetric_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
