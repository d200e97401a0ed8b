#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "genmetric/dataset.hpp"

namespace genmetric {

/// One Gaussian class-conditional N(mean, covariance) with its class prior.
struct GaussianModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd precision;
  double log_det = 0.0;
  double prior = 1.0;

  static GaussianModel from_moments(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double prior = 1.0);

  Eigen::Index dim() const { return mean.size(); }
  double log_density(const Eigen::VectorXd& x) const;
  /// Zero when the log-density falls below the log of the smallest normal double.
  double density(const Eigen::VectorXd& x) const;
  /// ∇∇p(x) = p(x)·[Σ⁻¹(x−μ)(x−μ)ᵀΣ⁻¹ − Σ⁻¹]
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
  /// ∇∇p(x) / p(x), which stays finite where p underflows.
  Eigen::MatrixXd normalized_hessian(const Eigen::VectorXd& x) const;
};

/// Class-conditional Gaussians, one per class id in `class_ids`.
struct GenerativeModelSet {
  std::vector<GaussianModel> models;
  std::vector<int> class_ids;
  double regularizer = 0.0;

  std::size_t size() const { return models.size(); }
  Eigen::Index dim() const { return models.empty() ? 0 : models.front().dim(); }
};

inline constexpr double kDefaultCovarianceRegularizer = 1e-3;

/// Sample means and covariances (denominator n_c) per class, with the
/// covariance regularized to Σ + λ·(trace Σ / D)·I. Priors are n_c / N.
/// Classes with fewer than `min_members` samples are skipped when
/// `skip_small` is set, and rejected otherwise.
GenerativeModelSet fit_gaussian_models(const LabeledDataset& train, double lambda_cov = kDefaultCovarianceRegularizer,
                                       bool skip_small = false, int min_members = 1);

struct PhiResult {
  Eigen::MatrixXd matrix;
  bool degenerate = false;
};

/// Multiway bias matrix
///   Φ = Σ_c ∇∇p_c · (Σ_{c'≠c} p_{c'}² − p_c·Σ_{c'≠c} p_{c'})
/// with p_c = prior_c · N(x | μ_c, Σ_c). Densities are shifted by their
/// common maximum before assembly, so Φ is known up to a positive factor.
PhiResult phi_matrix(const Eigen::VectorXd& x, const GenerativeModelSet& ms);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Importance-sampling estimate of ∫ p₁p₂/(p₁+p₂) dx for a binary set,
/// sampling from (p₁+p₂)/2. Priors are ignored (equal-prior form).
MonteCarloEstimate asymptotic_error_mc(const GenerativeModelSet& ms, int samples, std::uint64_t seed);

/// p₁p₂(p₂−p₁)/(p₁+p₂)² · Trace[M⁻¹(∇∇p₁/p₁ − ∇∇p₂/p₂)] for a binary set.
double bias_integrand(const Eigen::VectorXd& x, const Eigen::MatrixXd& metric, const GenerativeModelSet& ms);

}  // namespace genmetric
