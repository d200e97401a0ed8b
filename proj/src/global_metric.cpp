#include "genmetric/global_metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "genmetric/classify.hpp"
#include "genmetric/error.hpp"
#include "genmetric/kernels.hpp"
#include "genmetric/linalg.hpp"

namespace genmetric {

MetricMatrix uniform_combination(const std::vector<MetricMatrix>& locals) {
  if (locals.empty()) throw Error("uniform_combination: empty list");
  const auto d = locals.front().dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (const auto& m : locals) {
    if (m.dim() != d) throw Error("uniform_combination: metric dimensions differ");
    sum += m.matrix;
  }
  return MetricMatrix::global(linalg::symmetrize(sum / static_cast<double>(locals.size())), "UNI");
}

MetricMatrix weighted_combination(const std::vector<MetricMatrix>& locals, const std::vector<double>& weights,
                                  std::string method) {
  if (locals.empty()) throw Error("weighted_combination: empty list");
  if (weights.size() != locals.size()) throw Error("weighted_combination: one weight per metric required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("weighted_combination: weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("weighted_combination: weights sum to zero");
  const auto d = locals.front().dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < locals.size(); ++i) {
    if (locals[i].dim() != d) throw Error("weighted_combination: metric dimensions differ");
    if (weights[i] != 0.0) sum += (weights[i] / total) * locals[i].matrix;
  }
  return MetricMatrix::global(linalg::symmetrize(sum), std::move(method));
}

TransformFactor metric_sqrt_transform(const MetricMatrix& m) {
  if (m.matrix.rows() != m.matrix.cols()) throw Error("metric_sqrt_transform: metric must be square");
  return {linalg::sqrt_psd(m.matrix), m};
}

// ---------------------------------------------------------------------------

double kde_log_density(const Eigen::MatrixXd& train, double sigma, const Eigen::VectorXd& x) {
  if (!(sigma > 0.0)) throw Error("KDE bandwidth must be positive");
  if (train.rows() == 0) throw Error("KDE needs training points");
  if (x.size() != train.cols()) throw Error("KDE: dimension mismatch");
  const double inv_s2 = 1.0 / (sigma * sigma);
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(static_cast<std::size_t>(train.rows()));
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    const double t = -(train.row(i).transpose() - x).squaredNorm() * inv_s2;
    terms[static_cast<std::size_t>(i)] = t;
    top = std::max(top, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  const auto n = static_cast<double>(train.rows());
  const auto d = static_cast<double>(train.cols());
  const double log_h = std::log(n) + 0.5 * d * std::log(std::numbers::pi) + d * std::log(sigma);
  return top + std::log(acc) - log_h;
}

double kde_density(const Eigen::MatrixXd& train, double sigma, const Eigen::VectorXd& x) {
  return std::exp(kde_log_density(train, sigma, x));
}

double median_pairwise_distance(const Eigen::MatrixXd& x, std::uint64_t seed, std::size_t max_pairs) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw Error("median pairwise distance needs at least two points");
  const std::size_t total = n * (n - 1) / 2;
  std::vector<double> dists;
  if (total <= max_pairs) {
    dists.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        dists.push_back((x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm());
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    dists.reserve(max_pairs);
    while (dists.size() < max_pairs) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (i == j) continue;
      dists.push_back((x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm());
    }
  }
  return linalg::median(std::move(dists));
}

BandwidthChoice select_kde_bandwidth(const Eigen::MatrixXd& train, const Eigen::MatrixXd& validation) {
  const double base = median_pairwise_distance(train);
  if (!(base > 0.0)) throw Error("KDE bandwidth: all training points coincide");
  BandwidthChoice out;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = -3; k <= 3; ++k) {
    const double sigma = std::ldexp(base, k);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < validation.rows(); ++i) ll += kde_log_density(train, sigma, validation.row(i).transpose());
    out.log_likelihoods.push_back(ll);
    if (ll > best) {
      best = ll;
      out.sigma = sigma;
      out.exponent = k;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Weights proportional to exp(log_p), shifted by the max for range.
std::vector<double> normalized_from_log(const std::vector<double>& log_p, bool& fallback) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_p) top = std::max(top, v);
  std::vector<double> w(log_p.size(), 1.0 / static_cast<double>(log_p.size()));
  fallback = !std::isfinite(top);
  if (fallback) return w;
  double total = 0.0;
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    w[i] = std::exp(log_p[i] - top);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// Metric in coordinates z = T·x equivalent (up to scale) to M in x:
// |det T|^{2/D}·T⁻ᵀ·M·T⁻¹.
Eigen::MatrixXd transport(const Eigen::MatrixXd& m, const Eigen::MatrixXd& t_inv, double scale) {
  return linalg::symmetrize(scale * t_inv.transpose() * m * t_inv);
}

}  // namespace

DensityWeightedResult density_weighted_combination(const LabeledDataset& train, const LabeledDataset& validation,
                                                   const DensityWeightedOptions& options) {
  if (options.max_iter < 1) throw Error("density_weighted_combination: max_iter must be at least 1");
  if (train.dim() != validation.dim()) throw Error("density_weighted_combination: dimension mismatch");
  const auto n = static_cast<std::size_t>(train.size());
  const auto d = train.dim();
  if (options.fixed_weights && options.fixed_weights->size() != n) {
    throw Error("density_weighted_combination: fixed weights need one entry per training point");
  }

  const auto base_models = fit_gaussian_models(train, options.lambda_cov);
  const auto initial = compute_all_local_metrics(train, base_models, options.eps_rel);

  DensityWeightedResult out;
  Eigen::MatrixXd z_train = train.features;
  Eigen::MatrixXd z_val = validation.features;
  Eigen::MatrixXd total = Eigen::MatrixXd::Identity(d, d);  // T = L_t···L_1
  std::vector<int> current_labels = train.labels;
  MetricMatrix current;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    LabeledDataset z_ds = train;
    z_ds.features = z_train;

    // Density at each training point in the current coordinates.
    std::vector<double> weights;
    bool fallback = false;
    if (options.fixed_weights) {
      weights = *options.fixed_weights;
    } else if (options.estimator == DensityEstimatorKind::Kde) {
      const auto bw = select_kde_bandwidth(z_train, z_val);
      out.bandwidths.push_back(bw.sigma);
      std::vector<double> log_p(n);
      for (std::size_t i = 0; i < n; ++i) {
        log_p[i] = kde_log_density(z_train, bw.sigma, z_train.row(static_cast<Eigen::Index>(i)).transpose());
      }
      weights = normalized_from_log(log_p, fallback);
    } else {
      if (iter > 0) {
        LabeledDataset reference = validation;
        reference.features = z_val;
        const MetricMatrix id = MetricMatrix::identity(d);
        const int k = std::min<int>(options.reclassify_k, static_cast<int>(reference.size()));
        current_labels = knn_predict_batch(reference, KnnConfig{k, id, TieRule::SumDistanceThenIndex}, z_train);
      }
      LabeledDataset relabeled = z_ds;
      relabeled.labels = current_labels;
      const auto mixture = fit_gaussian_models(relabeled, options.lambda_cov, /*skip_small=*/true, 2);
      std::vector<double> log_p(n);
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd x = z_train.row(static_cast<Eigen::Index>(i)).transpose();
        double top = -std::numeric_limits<double>::infinity();
        std::vector<double> parts;
        for (const auto& g : mixture.models) {
          parts.push_back(std::log(g.prior) + g.log_density(x));
          top = std::max(top, parts.back());
        }
        double acc = 0.0;
        for (double v : parts) acc += std::exp(v - top);
        log_p[i] = top + std::log(acc);
      }
      weights = normalized_from_log(log_p, fallback);
    }
    if (fallback) ++out.fallback_iterations;
    out.weight_trajectory.push_back(weights);

    // Local metrics expressed in the current coordinates.
    std::vector<MetricMatrix> locals;
    if (iter == 0) {
      locals = initial;
    } else if (options.refit_local_metrics) {
      LabeledDataset fit_ds = z_ds;
      if (options.estimator == DensityEstimatorKind::Gmm) fit_ds.labels = current_labels;
      const auto models = fit_gaussian_models(fit_ds, options.lambda_cov, /*skip_small=*/true, 2);
      if (models.size() >= 2) {
        locals = compute_all_local_metrics(z_train, models, options.eps_rel);
      } else {
        locals.assign(n, MetricMatrix::identity(d));
      }
    } else {
      const Eigen::MatrixXd t_inv = total.inverse();
      const double scale = std::pow(std::abs(total.determinant()), 2.0 / static_cast<double>(d));
      locals.reserve(n);
      for (const auto& m : initial) {
        MetricMatrix q = m;
        q.matrix = transport(m.matrix, t_inv, scale);
        locals.push_back(std::move(q));
      }
    }

    current = weighted_combination(locals, weights,
                                   options.estimator == DensityEstimatorKind::Kde ? "KDE" : "GMM");
    if (iter + 1 == options.max_iter) break;
    const Eigen::MatrixXd step = linalg::sqrt_psd(current.matrix);
    out.factors.push_back(step);
    z_train = z_train * step.transpose();
    z_val = z_val * step.transpose();
    total = step * total;
  }

  // Final factor is √M_K; fold M_K directly to avoid one extra root.
  out.factors.push_back(linalg::sqrt_psd(current.matrix));
  Eigen::MatrixXd composed = current.matrix;
  if (options.max_iter > 1) composed = linalg::symmetrize(total.transpose() * current.matrix * total);
  out.metric = MetricMatrix::global(std::move(composed), current.method);
  return out;
}

// ---------------------------------------------------------------------------

Theorem1Diagnostics theorem1_diagnostics(const LabeledDataset& train, const MetricMatrix& m, double lambda_cov) {
  const auto d = train.dim();
  if (m.dim() != d) throw Error("theorem1: metric dimension mismatch");
  const Eigen::MatrixXd l = metric_sqrt_transform(m).L;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(l);
  if (!lu.isInvertible()) throw Error("theorem1: metric is singular");
  const Eigen::MatrixXd l_inv = lu.inverse();
  const double scale = std::pow(std::abs(l.determinant()), 2.0 / static_cast<double>(d));

  const auto models_x = fit_gaussian_models(train, lambda_cov);
  const auto locals_x = compute_all_local_metrics(train, models_x);

  LabeledDataset z = train;
  z.features = train.features * l.transpose();
  const auto models_z = fit_gaussian_models(z, lambda_cov);

  Theorem1Diagnostics out;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < locals_x.size(); ++i) {
    const Eigen::MatrixXd q = transport(locals_x[i].matrix, l_inv, scale);
    sum += q;
    if (locals_x[i].degenerate) {
      ++out.degenerate_points;
      continue;
    }
    const auto psi = phi_matrix(z.point(static_cast<Eigen::Index>(i)), models_z);
    const double norm = psi.matrix.norm();
    if (norm > 0.0) {
      const double tr = q.ldlt().solve(psi.matrix).trace();
      out.max_trace_violation = std::max(out.max_trace_violation, std::abs(tr) / norm);
    }
  }
  auto residual_of = [d](const Eigen::MatrixXd& mean) {
    const double c = mean.trace() / static_cast<double>(d);
    return (mean - c * Eigen::MatrixXd::Identity(d, d)).norm() / (c * std::sqrt(static_cast<double>(d)));
  };
  out.residual = residual_of(sum / static_cast<double>(locals_x.size()));
  out.resolved_residual = residual_of(uniform_combination(compute_all_local_metrics(z, models_z)).matrix);
  return out;
}

double theorem1_residual(const LabeledDataset& train, const MetricMatrix& m, double lambda_cov) {
  return theorem1_diagnostics(train, m, lambda_cov).residual;
}

}  // namespace genmetric
