#include "genmetric/generative.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "genmetric/error.hpp"
#include "genmetric/linalg.hpp"

namespace genmetric {

namespace {

const double kLogMinNormal = std::log(std::numeric_limits<double>::min());

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void require_binary(const GenerativeModelSet& ms, const char* op) {
  if (ms.size() != 2) throw Error(std::string(op) + " requires exactly two class models");
}

}  // namespace

GaussianModel GaussianModel::from_moments(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double prior) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw Error("Gaussian covariance shape does not match mean");
  }
  GaussianModel g;
  g.mean = std::move(mean);
  g.covariance = linalg::symmetrize(covariance);
  const auto eig = linalg::eigh(g.covariance);
  if (!(eig.values.minCoeff() > 0.0)) throw Error("covariance is not positive definite");
  g.precision = linalg::symmetrize(linalg::compose(eig.vectors, eig.values.cwiseInverse()));
  g.log_det = eig.values.array().log().sum();
  g.prior = prior;
  return g;
}

double GaussianModel::log_density(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw Error("density: dimension mismatch");
  const Eigen::VectorXd d = x - mean;
  const double quad = d.dot(precision * d);
  return -0.5 * quad - 0.5 * log_det - 0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi);
}

double GaussianModel::density(const Eigen::VectorXd& x) const {
  const double lp = log_density(x);
  return lp < kLogMinNormal ? 0.0 : std::exp(lp);
}

Eigen::MatrixXd GaussianModel::normalized_hessian(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw Error("hessian: dimension mismatch");
  const Eigen::VectorXd v = precision * (x - mean);
  return linalg::symmetrize(v * v.transpose() - precision);
}

Eigen::MatrixXd GaussianModel::hessian(const Eigen::VectorXd& x) const { return density(x) * normalized_hessian(x); }

GenerativeModelSet fit_gaussian_models(const LabeledDataset& train, double lambda_cov, bool skip_small,
                                       int min_members) {
  if (lambda_cov < 0.0) throw Error("covariance regularizer must be non-negative");
  const auto d = train.dim();
  const auto counts = train.class_counts();

  GenerativeModelSet ms;
  ms.regularizer = lambda_cov;
  int used = 0;
  for (int c = 0; c < train.class_count; ++c) {
    if (counts[static_cast<std::size_t>(c)] < std::max(min_members, 1)) {
      if (skip_small) continue;
      throw Error("class " + std::to_string(c) + " has too few samples to fit a Gaussian");
    }
    used += counts[static_cast<std::size_t>(c)];
  }

  for (int c = 0; c < train.class_count; ++c) {
    const int nc = counts[static_cast<std::size_t>(c)];
    if (nc < std::max(min_members, 1)) continue;
    Eigen::MatrixXd members(nc, d);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < train.size(); ++i) {
      if (train.labels[static_cast<std::size_t>(i)] == c) members.row(r++) = train.features.row(i);
    }
    Eigen::VectorXd mu = members.colwise().mean().transpose();
    const Eigen::MatrixXd centered = members.rowwise() - mu.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(nc);
    const double trace = cov.trace();
    const double ridge = trace > 0.0 ? lambda_cov * trace / static_cast<double>(d) : lambda_cov;
    cov.diagonal().array() += ridge;
    try {
      ms.models.push_back(GaussianModel::from_moments(std::move(mu), std::move(cov), nc / static_cast<double>(used)));
    } catch (const Error&) {
      throw Error("covariance of class " + std::to_string(c) + " is not positive definite; increase the regularizer");
    }
    ms.class_ids.push_back(c);
  }
  return ms;
}

PhiResult phi_matrix(const Eigen::VectorXd& x, const GenerativeModelSet& ms) {
  if (ms.size() < 2) throw Error("phi_matrix requires at least two class models");
  const auto d = ms.dim();
  if (x.size() != d) throw Error("phi_matrix: dimension mismatch");

  const std::size_t classes = ms.size();
  std::vector<double> log_p(classes);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < classes; ++c) {
    log_p[c] = std::log(ms.models[c].prior) + ms.models[c].log_density(x);
    top = std::max(top, log_p[c]);
  }
  PhiResult out{Eigen::MatrixXd::Zero(d, d), false};
  if (!(top >= kLogMinNormal)) {
    out.degenerate = true;
    return out;
  }

  std::vector<double> p(classes);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    p[c] = std::exp(log_p[c] - top);
    sum += p[c];
    sum_sq += p[c] * p[c];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    const double others_sq = sum_sq - p[c] * p[c];
    const double others = sum - p[c];
    const double weight = p[c] * (others_sq - p[c] * others);
    if (weight == 0.0) continue;
    out.matrix.noalias() += weight * ms.models[c].normalized_hessian(x);
  }
  out.matrix = linalg::symmetrize(out.matrix);
  return out;
}

MonteCarloEstimate asymptotic_error_mc(const GenerativeModelSet& ms, int samples, std::uint64_t seed) {
  require_binary(ms, "asymptotic_error_mc");
  if (samples < 2) throw Error("asymptotic_error_mc needs at least two samples");
  const auto d = ms.dim();
  std::vector<Eigen::MatrixXd> factors;
  for (const auto& m : ms.models) factors.emplace_back(Eigen::LLT<Eigen::MatrixXd>(m.covariance).matrixL());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd z(d);
  double mean = 0.0, m2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    const std::size_t k = coin(rng) ? 1 : 0;
    for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
    const Eigen::VectorXd x = ms.models[k].mean + factors[k] * z;
    const double a = ms.models[0].log_density(x);
    const double b = ms.models[1].log_density(x);
    // p₁p₂ / ((p₁+p₂)·(p₁+p₂)/2)
    const double w = 2.0 * std::exp(a + b - 2.0 * log_sum_exp(a, b));
    const double delta = w - mean;
    mean += delta / (s + 1);
    m2 += delta * (w - mean);
  }
  const double var = m2 / (samples - 1);
  return {mean, std::sqrt(var / samples)};
}

double bias_integrand(const Eigen::VectorXd& x, const Eigen::MatrixXd& metric, const GenerativeModelSet& ms) {
  require_binary(ms, "bias_integrand");
  const auto d = ms.dim();
  if (metric.rows() != d || metric.cols() != d) throw Error("bias_integrand: metric dimension mismatch");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(metric);
  if (!lu.isInvertible()) throw Error("bias_integrand: metric is singular");

  const double a = ms.models[0].log_density(x);
  const double b = ms.models[1].log_density(x);
  const double top = std::max(a, b);
  const double q1 = std::exp(a - top);
  const double q2 = std::exp(b - top);
  // Homogeneous of degree one in (p₁, p₂).
  const double weight = std::exp(top) * q1 * q2 * (q2 - q1) / ((q1 + q2) * (q1 + q2));
  if (weight == 0.0) return 0.0;
  const Eigen::MatrixXd phi = ms.models[0].normalized_hessian(x) - ms.models[1].normalized_hessian(x);
  return weight * lu.solve(phi).trace();
}

}  // namespace genmetric
