#include "genmetric/kernel_mkl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include "genmetric/error.hpp"
#include "genmetric/kernels.hpp"
#include "genmetric/linalg.hpp"

namespace genmetric {

double rbf_metric_kernel(const BaseKernel& bk, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() != bk.metric.dim()) throw Error("rbf kernel: dimension mismatch");
  return std::exp(-detail::quad_form(bk.metric.matrix, x - y) / bk.sigma2);
}

std::vector<double> default_tau_grid() {
  std::vector<double> out;
  for (int e = -6; e <= 8; ++e) out.push_back(std::ldexp(1.0, e));
  return out;
}

double median_squared_distance(const Eigen::MatrixXd& x, const MetricMatrix& m, std::uint64_t seed,
                               std::size_t max_pairs) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw Error("kernel bank needs at least two training points");
  const std::size_t total = n * (n - 1) / 2;
  std::vector<double> d;
  auto dist = [&](std::size_t i, std::size_t j) {
    return detail::quad_form(m.matrix, (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).transpose());
  };
  if (total <= max_pairs) {
    d.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) d.push_back(dist(i, j));
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    d.reserve(max_pairs);
    while (d.size() < max_pairs) {
      const std::size_t i = pick(rng), j = pick(rng);
      if (i != j) d.push_back(dist(i, j));
    }
  }
  return linalg::median(std::move(d));
}

std::vector<BaseKernel> build_kernel_bank(const std::vector<MetricMatrix>& metrics, const std::vector<double>& tau_grid,
                                          const Eigen::MatrixXd& x_train, std::uint64_t seed) {
  if (metrics.empty() || tau_grid.empty()) throw Error("kernel bank: empty metric list or bandwidth grid");
  std::vector<BaseKernel> bank;
  for (std::size_t p = 0; p < metrics.size(); ++p) {
    if (metrics[p].dim() != x_train.cols()) throw Error("kernel bank: metric dimension mismatch");
    const double s0 = median_squared_distance(x_train, metrics[p], seed);
    if (!(s0 > 0.0)) throw Error("degenerate pairwise distances");
    for (double tau : tau_grid) {
      if (!(tau > 0.0)) throw Error("kernel bank: bandwidth scales must be positive");
      bank.push_back({metrics[p], s0 / tau, tau, static_cast<int>(p)});
    }
  }
  return bank;
}

Eigen::MatrixXd gram_matrix(const BaseKernel& bk, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd k = parallel::rbf_gram(x, x, bk.metric.matrix, bk.sigma2);
  return linalg::symmetrize(k);
}

Eigen::MatrixXd cross_gram(const BaseKernel& bk, const Eigen::MatrixXd& queries, const Eigen::MatrixXd& reference) {
  return parallel::rbf_gram(queries, reference, bk.metric.matrix, bk.sigma2);
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kTau = 1e-12;

bool in_up(double y, double b, double c) { return (y > 0 && b < c) || (y < 0 && b > 0); }
bool in_low(double y, double b, double c) { return (y > 0 && b > 0) || (y < 0 && b < c); }

}  // namespace

SvmSolution svm_solve(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c, const SvmOptions& options,
                      const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = k.rows();
  if (k.cols() != n || y.size() != n) throw Error("svm: kernel and label sizes differ");
  if (!(c > 0.0)) throw Error("svm: C must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) != 1.0 && y(i) != -1.0) throw Error("svm: labels must be +1 or -1");
  }

  const Eigen::MatrixXd q = y.asDiagonal() * k * y.asDiagonal();
  SvmSolution s;
  s.beta = Eigen::VectorXd::Zero(n);
  if (warm_start) {
    if (warm_start->size() != n) throw Error("svm: warm start has the wrong size");
    s.beta = warm_start->cwiseMax(0.0).cwiseMin(c);
  }
  Eigen::VectorXd grad = q * s.beta - Eigen::VectorXd::Ones(n);  // ∇ of ½βᵀQβ − Σβ

  const long cap = options.max_iter > 0 ? options.max_iter : std::max<long>(10'000'000, 100 * static_cast<long>(n));
  for (s.iterations = 0; s.iterations < cap; ++s.iterations) {
    // i: maximal violator in I_up; j: second-order choice in I_low.
    int i = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(y(t), s.beta(t), c) && -y(t) * grad(t) > gmax) {
        gmax = -y(t) * grad(t);
        i = static_cast<int>(t);
      }
    }
    int j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(y(t), s.beta(t), c)) continue;
      const double v = -y(t) * grad(t);
      gmin = std::min(gmin, v);
      if (i < 0) continue;
      const double b = gmax - v;
      if (b > 0) {
        double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (a <= 0) a = kTau;
        if (-b * b / a < best) {
          best = -b * b / a;
          j = static_cast<int>(t);
        }
      }
    }
    s.max_violation = (i < 0 || !std::isfinite(gmin)) ? 0.0 : std::max(0.0, gmax - gmin);
    if (i < 0 || j < 0 || s.max_violation < options.tolerance) {
      s.converged = true;
      break;
    }

    const double bi = s.beta(i), bj = s.beta(j);
    double& ai = s.beta(i);
    double& aj = s.beta(j);
    if (y(i) != y(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) { aj = 0; ai = diff; }
      } else {
        if (ai < 0) { ai = 0; aj = -diff; }
      }
      if (diff > 0) {
        if (ai > c) { ai = c; aj = c - diff; }
      } else {
        if (aj > c) { aj = c; ai = c + diff; }
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) { ai = c; aj = sum - c; }
      } else {
        if (aj < 0) { aj = 0; ai = sum; }
      }
      if (sum > c) {
        if (aj > c) { aj = c; ai = sum - c; }
      } else {
        if (ai < 0) { ai = 0; aj = sum; }
      }
    }
    grad += q.col(i) * (ai - bi) + q.col(j) * (aj - bj);
  }

  // Bias: −ρ with ρ the mean of y·G over free vectors (midpoint otherwise).
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (s.beta(t) >= c) {
      if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (s.beta(t) <= 0) {
      if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  double rho = 0.0;
  if (free > 0) {
    rho = sum_free / free;
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else if (std::isfinite(ub)) {
    rho = ub;
  } else if (std::isfinite(lb)) {
    rho = lb;
  }
  s.bias = -rho;
  s.objective = -(0.5 * s.beta.dot(grad) - 0.5 * s.beta.sum());
  return s;
}

Eigen::VectorXd svm_decision(const Eigen::MatrixXd& cross, const Eigen::VectorXd& beta, const Eigen::VectorXd& y,
                             double bias) {
  if (cross.cols() != beta.size()) throw Error("svm decision: kernel width does not match the training set");
  return (cross * beta.cwiseProduct(y)).array() + bias;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw Error("simplex projection of an empty vector");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumulative += u[static_cast<std::size_t>(i)];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] - t > 0) theta = t;
  }
  Eigen::VectorXd out = (v.array() - theta).cwiseMax(0.0);
  return out / out.sum();
}

Eigen::MatrixXd combine_kernels(const std::vector<Eigen::MatrixXd>& grams, const Eigen::VectorXd& alpha) {
  if (grams.empty() || static_cast<Eigen::Index>(grams.size()) != alpha.size()) {
    throw Error("kernel combination: one weight per kernel required");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grams.front().rows(), grams.front().cols());
  for (std::size_t k = 0; k < grams.size(); ++k) {
    if (grams[k].rows() != out.rows() || grams[k].cols() != out.cols()) throw Error("kernel combination: size mismatch");
    if (alpha(static_cast<Eigen::Index>(k)) != 0.0) out += alpha(static_cast<Eigen::Index>(k)) * grams[k];
  }
  return out;
}

MklModel mkl_train(const std::vector<Eigen::MatrixXd>& grams, const Eigen::VectorXd& y, const MklOptions& options) {
  if (grams.empty()) throw Error("MKL needs at least one kernel");
  const auto m = static_cast<Eigen::Index>(grams.size());
  MklModel model;
  model.c = options.c;
  model.y = y;
  model.alpha = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));

  SvmSolution sol = svm_solve(combine_kernels(grams, model.alpha), y, options.c, options.svm);
  model.svm_converged = sol.converged;
  double objective = sol.objective;
  model.objective_history.push_back(objective);

  double eta = -1.0;
  if (m > 1) {
    for (model.iterations = 0; model.iterations < options.max_iter; ++model.iterations) {
      const Eigen::VectorXd by = sol.beta.cwiseProduct(y);
      Eigen::VectorXd grad(m);
      for (Eigen::Index k = 0; k < m; ++k) grad(k) = -0.5 * by.dot(grams[static_cast<std::size_t>(k)] * by);
      const double spread = grad.maxCoeff() - grad.minCoeff();
      if (!(spread > 0.0)) {
        model.converged = true;
        break;
      }
      if (eta < 0) eta = 1.0 / spread;

      bool accepted = false;
      Eigen::VectorXd next;
      SvmSolution next_sol;
      for (int bt = 0; bt < options.max_backtracks; ++bt, eta *= 0.5) {
        next = project_to_simplex(model.alpha - eta * grad);
        if ((next - model.alpha).lpNorm<1>() < 1e-14) break;
        next_sol = svm_solve(combine_kernels(grams, next), y, options.c, options.svm, &sol.beta);
        if (next_sol.objective < objective) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        model.converged = true;
        break;
      }
      const double step = (next - model.alpha).lpNorm<1>();
      const double decrease = objective - next_sol.objective;
      model.alpha = next;
      sol = std::move(next_sol);
      model.svm_converged = model.svm_converged && sol.converged;
      objective = sol.objective;
      model.objective_history.push_back(objective);
      eta *= 2.0;
      if (step < options.tolerance || decrease < options.tolerance * std::max(1.0, std::abs(objective))) {
        model.converged = true;
        ++model.iterations;
        break;
      }
    }
  } else {
    model.converged = true;
  }

  model.beta = sol.beta;
  model.bias = sol.bias;
  for (Eigen::Index i = 0; i < model.beta.size(); ++i) {
    if (model.beta(i) > 0.0) model.support.push_back(static_cast<int>(i));
  }
  return model;
}

Eigen::VectorXd mkl_decision(const MklModel& model, const std::vector<Eigen::MatrixXd>& cross) {
  return svm_decision(combine_kernels(cross, model.alpha), model.beta, model.y, model.bias);
}

MklClassifier mkl_train_multiclass(const std::vector<Eigen::MatrixXd>& grams, const std::vector<int>& labels,
                                   int class_count, const MklOptions& options) {
  if (class_count < 2) throw Error("MKL classification needs at least two classes");
  if (grams.empty() || grams.front().rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error("MKL: kernel size does not match the label count");
  }
  MklClassifier out;
  out.class_count = class_count;
  const int problems = class_count == 2 ? 1 : class_count;
  out.models.resize(static_cast<std::size_t>(problems));
  const auto n = static_cast<Eigen::Index>(labels.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < problems; ++c) {
    try {
      const int positive = class_count == 2 ? 1 : c;
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] == positive ? 1.0 : -1.0;
      out.models[static_cast<std::size_t>(c)] = mkl_train(grams, y, options);
    } catch (...) {
#pragma omp critical(genmetric_mkl_train)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<int> mkl_predict(const MklClassifier& model, const std::vector<Eigen::MatrixXd>& cross) {
  if (model.models.empty()) throw Error("MKL model is not trained");
  if (cross.empty()) throw Error("MKL prediction needs query kernels");
  const auto nq = cross.front().rows();
  std::vector<int> out(static_cast<std::size_t>(nq), 0);
  if (model.class_count == 2) {
    const Eigen::VectorXd f = mkl_decision(model.models.front(), cross);
    for (Eigen::Index q = 0; q < nq; ++q) out[static_cast<std::size_t>(q)] = f(q) > 0.0 ? 1 : 0;
    return out;
  }
  Eigen::MatrixXd scores(nq, model.class_count);
  for (int c = 0; c < model.class_count; ++c) scores.col(c) = mkl_decision(model.models[static_cast<std::size_t>(c)], cross);
  for (Eigen::Index q = 0; q < nq; ++q) {
    int best = 0;
    for (int c = 1; c < model.class_count; ++c) {
      if (scores(q, c) > scores(q, best)) best = c;
    }
    out[static_cast<std::size_t>(q)] = best;
  }
  return out;
}

MklRun mkl_tune_and_test(const std::vector<MetricMatrix>& metrics, const LabeledDataset& train,
                         const LabeledDataset& validation, const LabeledDataset& test, const std::vector<double>& c_grid,
                         const std::vector<double>& tau_grid, const MklOptions& options, std::uint64_t seed) {
  if (c_grid.empty()) throw Error("MKL: empty C grid");
  const auto start = std::chrono::steady_clock::now();
  MklRun run;
  run.bank = build_kernel_bank(metrics, tau_grid, train.features, seed);
  std::vector<Eigen::MatrixXd> k_train, k_val, k_test;
  for (const auto& bk : run.bank) {
    k_train.push_back(gram_matrix(bk, train.features));
    k_val.push_back(cross_gram(bk, validation.features, train.features));
    k_test.push_back(cross_gram(bk, test.features, train.features));
  }
  const int classes = train.class_count;
  double best = std::numeric_limits<double>::infinity();
  for (double c : c_grid) {
    MklOptions o = options;
    o.c = c;
    auto model = mkl_train_multiclass(k_train, train.labels, classes, o);
    const double err = evaluate_error(mkl_predict(model, k_val), validation.labels);
    run.result.grid.push_back({{{"C", c}}, err});
    if (err < best) {
      best = err;
      run.model = std::move(model);
      run.result.selected = {{"C", c}};
      run.result.validation_error = err;
    }
  }
  const auto test_start = std::chrono::steady_clock::now();
  run.result.tuning_seconds = std::chrono::duration<double>(test_start - start).count();
  run.result.test_predictions = mkl_predict(run.model, k_test);
  run.result.test_error = evaluate_error(run.result.test_predictions, test.labels);
  const auto end = std::chrono::steady_clock::now();
  run.result.testing_seconds = std::chrono::duration<double>(end - test_start).count();
  run.result.seconds = std::chrono::duration<double>(end - start).count();
  return run;
}

}  // namespace genmetric
