#pragma once

#include <vector>

#include <Eigen/Dense>

namespace genmetric::linalg {

/// Eigen-decomposition of a symmetric matrix; eigenvalues ascending.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SymmetricEigen eigh(const Eigen::MatrixXd& a);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

double max_abs(const Eigen::MatrixXd& a);

// ‖A − Aᵀ‖_max, relative to max|A| (absolute when A is zero).
double relative_asymmetry(const Eigen::MatrixXd& a);

/// U·diag(values)·Uᵀ
Eigen::MatrixXd compose(const Eigen::MatrixXd& vectors, const Eigen::VectorXd& values);

/// Principal square root of a symmetric PSD matrix. Eigenvalues in
/// [-tol·max, 0) are clamped to zero; anything more negative throws.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m, double tol = 1e-10);

/// Sum of log-eigenvalues; -inf if any eigenvalue is non-positive.
double log_det_sym(const Eigen::MatrixXd& m);

/// Scales a symmetric PD matrix to unit determinant eigenvalue by
/// eigenvalue, dividing each by exp(mean log-eigenvalue).
Eigen::MatrixXd det_normalize(const Eigen::MatrixXd& m);

double median(std::vector<double> values);

}  // namespace genmetric::linalg
