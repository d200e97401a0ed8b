#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genmetric/dataset.hpp"
#include "genmetric/generative.hpp"

namespace genmetric {

enum class Provenance { Local, Regional, Global, Euclidean };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// Symmetric PSD matrix M defining the squared distance (x−x')ᵀM(x−x').
struct MetricMatrix {
  Eigen::MatrixXd matrix;
  Provenance provenance = Provenance::Euclidean;
  int index = -1;          // point index (local) or cluster id (regional)
  std::string method;      // global combination method, e.g. "UNI"
  bool det_normalized = false;
  bool degenerate = false;

  static MetricMatrix identity(Eigen::Index dim);
  static MetricMatrix global(Eigen::MatrixXd m, std::string method);

  Eigen::Index dim() const { return matrix.rows(); }
};

/// Checks the symmetry/PSD/determinant invariants, throwing on failure.
void check_metric(const MetricMatrix& m, double det_tol = 1e-6);

/// Eigen-structure of Φ used by the closed-form local solver.
struct SpectralSolution {
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // columns match `eigenvalues`
  int d_plus = 0;
  int d_minus = 0;
  int d_zero = 0;
  bool degenerate = false;
};

inline constexpr double kDefaultSpectralTolerance = 1e-9;

SpectralSolution spectral_decompose(const Eigen::MatrixXd& phi, double eps_rel = kDefaultSpectralTolerance);

/// Closed-form minimizer of (Trace[M⁻¹Φ])² subject to det M = 1, M ⪰ 0.
///
/// Indefinite Φ: M ∝ U·blockdiag(d⁺Λ⁺, −d⁻Λ⁻)·Uᵀ, which zeroes the trace.
/// Definite Φ: M ∝ ±Φ. Eigenvalues with |λ| ≤ eps_rel·max|λ| are
/// treated as a null block whose metric eigenvalue is the geometric mean of
/// the others (they do not enter the trace). Φ ≈ 0 gives the identity with
/// the degenerate flag set.
MetricMatrix solve_local_metric(const Eigen::MatrixXd& phi, double eps_rel = kDefaultSpectralTolerance);

/// (1−λ)·M + λ·I, re-normalized to unit determinant when M was.
MetricMatrix interpolate_with_euclidean(const MetricMatrix& m, double lambda);

/// Local metric at every row of `x` from the fitted class-conditionals.
/// Degenerate points yield the identity. Runs on the OpenMP kernel.
std::vector<MetricMatrix> compute_all_local_metrics(const Eigen::MatrixXd& x, const GenerativeModelSet& ms,
                                                    double eps_rel = kDefaultSpectralTolerance);

std::vector<MetricMatrix> compute_all_local_metrics(const LabeledDataset& train, const GenerativeModelSet& ms,
                                                    double eps_rel = kDefaultSpectralTolerance);

struct RegionalMetrics {
  std::vector<MetricMatrix> metrics;
  std::vector<int> assignment;
};

/// Euclidean k-means (k = regions, 10 restarts) over `x`, then the
/// arithmetic mean of member local metrics per cluster.
RegionalMetrics regional_metrics(const std::vector<MetricMatrix>& locals, const Eigen::MatrixXd& x, int regions,
                                 std::uint64_t seed);

}  // namespace genmetric
