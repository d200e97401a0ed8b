#include "genmetric/local_metric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genmetric/error.hpp"
#include "genmetric/kernels.hpp"
#include "genmetric/linalg.hpp"
#include "genmetric/unsupervised.hpp"

namespace genmetric {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Local: return "local";
    case Provenance::Regional: return "regional";
    case Provenance::Global: return "global";
    case Provenance::Euclidean: return "euclidean";
  }
  return "unknown";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "local") return Provenance::Local;
  if (s == "regional") return Provenance::Regional;
  if (s == "global") return Provenance::Global;
  if (s == "euclidean") return Provenance::Euclidean;
  throw Error("unknown metric provenance '" + s + "'");
}

MetricMatrix MetricMatrix::identity(Eigen::Index dim) {
  MetricMatrix m;
  m.matrix = Eigen::MatrixXd::Identity(dim, dim);
  m.provenance = Provenance::Euclidean;
  m.det_normalized = true;
  return m;
}

MetricMatrix MetricMatrix::global(Eigen::MatrixXd m, std::string method) {
  MetricMatrix out;
  out.matrix = std::move(m);
  out.provenance = Provenance::Global;
  out.method = std::move(method);
  return out;
}

void check_metric(const MetricMatrix& m, double det_tol) {
  if (m.matrix.rows() != m.matrix.cols() || m.matrix.rows() == 0) throw Error("metric must be a non-empty square matrix");
  if (linalg::max_abs(m.matrix - m.matrix.transpose()) > 1e-12 * std::max(1.0, linalg::max_abs(m.matrix))) {
    throw Error("metric is not symmetric");
  }
  const auto eig = linalg::eigh(m.matrix);
  const double top = eig.values.maxCoeff();
  if (eig.values.minCoeff() < -1e-10 * std::abs(top)) throw Error("metric is not positive semidefinite");
  if (m.det_normalized) {
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) log_det += std::log(eig.values(i));
    if (!(std::abs(std::exp(log_det) - 1.0) < det_tol)) throw Error("metric determinant is not 1");
  }
}

SpectralSolution spectral_decompose(const Eigen::MatrixXd& phi, double eps_rel) {
  if (phi.rows() != phi.cols()) throw Error("phi must be square");
  if (linalg::relative_asymmetry(phi) > 1e-10) throw Error("phi is not symmetric");
  const auto eig = linalg::eigh(linalg::symmetrize(phi));
  const auto d = eig.values.size();

  SpectralSolution s;
  s.eigenvalues = eig.values.reverse();
  s.eigenvectors = eig.vectors.rowwise().reverse();
  const double top = s.eigenvalues.cwiseAbs().maxCoeff();
  if (!(top > 0.0) || !std::isfinite(top)) {
    s.d_zero = static_cast<int>(d);
    s.degenerate = true;
    return s;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    const double lam = s.eigenvalues(i);
    if (lam > eps_rel * top) {
      ++s.d_plus;
    } else if (lam < -eps_rel * top) {
      ++s.d_minus;
    } else {
      ++s.d_zero;
    }
  }
  return s;
}

MetricMatrix solve_local_metric(const Eigen::MatrixXd& phi, double eps_rel) {
  const auto s = spectral_decompose(phi, eps_rel);
  const auto d = s.eigenvalues.size();
  if (s.degenerate) {
    MetricMatrix m = MetricMatrix::identity(d);
    m.provenance = Provenance::Local;
    m.degenerate = true;
    return m;
  }

  const double top = s.eigenvalues.cwiseAbs().maxCoeff();
  const bool indefinite = s.d_plus > 0 && s.d_minus > 0;
  // Sign applied to the definite fallback: M ∝ Φ or M ∝ −Φ.
  const double definite_sign = s.d_plus > 0 ? 1.0 : -1.0;

  Eigen::VectorXd values(d);
  double log_sum = 0.0;
  int nonzero = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double lam = s.eigenvalues(i);
    double v = 0.0;
    if (std::abs(lam) <= eps_rel * top) {
      v = 0.0;  // null block, filled below
    } else if (indefinite) {
      v = lam > 0.0 ? s.d_plus * lam : -s.d_minus * lam;
    } else {
      v = definite_sign * lam;
    }
    values(i) = v;
    if (v > 0.0) {
      log_sum += std::log(v);
      ++nonzero;
    }
  }
  const double null_value = std::exp(log_sum / nonzero);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (values(i) == 0.0) values(i) = null_value;
  }
  // Unit determinant: divide every eigenvalue by exp(mean log-eigenvalue).
  const double mean_log = values.array().log().mean();
  values = (values.array().log() - mean_log).exp().matrix();

  MetricMatrix m;
  m.matrix = linalg::symmetrize(linalg::compose(s.eigenvectors, values));
  m.provenance = Provenance::Local;
  m.det_normalized = true;
  return m;
}

MetricMatrix interpolate_with_euclidean(const MetricMatrix& m, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("interpolation weight must lie in [0, 1]");
  MetricMatrix out = m;
  if (lambda == 0.0) return out;
  const auto d = m.dim();
  out.matrix = (1.0 - lambda) * m.matrix + lambda * Eigen::MatrixXd::Identity(d, d);
  if (m.det_normalized) out.matrix = linalg::det_normalize(out.matrix);
  out.matrix = linalg::symmetrize(out.matrix);
  return out;
}

std::vector<MetricMatrix> compute_all_local_metrics(const Eigen::MatrixXd& x, const GenerativeModelSet& ms,
                                                    double eps_rel) {
  if (x.cols() != ms.dim()) throw Error("local metrics: data and models differ in dimension");
  return parallel::local_metrics(x, ms, eps_rel);
}

std::vector<MetricMatrix> compute_all_local_metrics(const LabeledDataset& train, const GenerativeModelSet& ms,
                                                    double eps_rel) {
  return compute_all_local_metrics(train.features, ms, eps_rel);
}

RegionalMetrics regional_metrics(const std::vector<MetricMatrix>& locals, const Eigen::MatrixXd& x, int regions,
                                 std::uint64_t seed) {
  const auto n = static_cast<int>(x.rows());
  if (static_cast<int>(locals.size()) != n) throw Error("regional metrics: one local metric per point required");
  if (regions < 1 || regions > n) throw Error("regional metrics: region count must lie in [1, N]");

  RegionalMetrics out;
  if (regions == 1) {
    out.assignment.assign(static_cast<std::size_t>(n), 0);
  } else {
    out.assignment = kmeans(x, regions, MetricMatrix::identity(x.cols()), seed, 10).assignments;
  }
  const auto d = x.cols();
  std::vector<Eigen::MatrixXd> sums(static_cast<std::size_t>(regions), Eigen::MatrixXd::Zero(d, d));
  std::vector<int> counts(static_cast<std::size_t>(regions), 0);
  for (int i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(out.assignment[static_cast<std::size_t>(i)]);
    sums[r] += locals[static_cast<std::size_t>(i)].matrix;
    ++counts[r];
  }
  for (int r = 0; r < regions; ++r) {
    MetricMatrix m;
    m.matrix = sums[static_cast<std::size_t>(r)] / static_cast<double>(counts[static_cast<std::size_t>(r)]);
    m.provenance = Provenance::Regional;
    m.index = r;
    out.metrics.push_back(std::move(m));
  }
  return out;
}

namespace detail {

MetricMatrix local_metric_at(const Eigen::VectorXd& x, const GenerativeModelSet& ms, double eps_rel, int index) {
  const auto phi = phi_matrix(x, ms);
  MetricMatrix m = phi.degenerate ? MetricMatrix::identity(x.size()) : solve_local_metric(phi.matrix, eps_rel);
  m.provenance = Provenance::Local;
  m.index = index;
  m.degenerate = m.degenerate || phi.degenerate;
  return m;
}

}  // namespace detail

}  // namespace genmetric
