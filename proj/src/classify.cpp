#include "genmetric/classify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "genmetric/error.hpp"
#include "genmetric/global_metric.hpp"
#include "genmetric/kernels.hpp"
#include "genmetric/linalg.hpp"

namespace genmetric {

double mahalanobis_distance(const MetricMatrix& m, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() != m.dim()) throw Error("mahalanobis_distance: dimension mismatch");
  const Eigen::VectorXd diff = x - y;
  return detail::quad_form(m.matrix, diff);
}

std::vector<int> neighbor_order(const Eigen::Ref<const Eigen::VectorXd>& dist) {
  std::vector<int> order(static_cast<std::size_t>(dist.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist(a) < dist(b); });
  return order;
}

int knn_vote(const std::vector<int>& order, const Eigen::Ref<const Eigen::VectorXd>& dist,
             const std::vector<int>& labels, int class_count, int k) {
  std::vector<int> votes(static_cast<std::size_t>(class_count), 0);
  std::vector<double> sums(static_cast<std::size_t>(class_count), 0.0);
  for (int j = 0; j < k; ++j) {
    const int idx = order[static_cast<std::size_t>(j)];
    const auto y = static_cast<std::size_t>(labels[static_cast<std::size_t>(idx)]);
    ++votes[y];
    sums[y] += dist(idx);
  }
  int best = 0;
  for (int c = 1; c < class_count; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    const auto bb = static_cast<std::size_t>(best);
    if (votes[cc] > votes[bb] || (votes[cc] == votes[bb] && votes[cc] > 0 && sums[cc] < sums[bb])) best = c;
  }
  return best;
}

namespace {

void check_knn(const LabeledDataset& train, int k) {
  if (train.size() == 0) throw Error("knn: empty training set");
  if (k < 1 || k > train.size()) throw Error("knn: k must lie in [1, N_train]");
}

}  // namespace

int knn_predict(const LabeledDataset& train, const KnnConfig& cfg, const Eigen::VectorXd& x) {
  return knn_predict_batch(train, cfg, x.transpose()).front();
}

std::vector<int> knn_predict_batch(const LabeledDataset& train, const KnnConfig& cfg, const Eigen::MatrixXd& queries) {
  check_knn(train, cfg.k);
  const Eigen::MatrixXd dist = parallel::squared_distances(queries, train.features, cfg.metric.matrix);
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const Eigen::VectorXd row = dist.row(q).transpose();
    out[static_cast<std::size_t>(q)] = knn_vote(neighbor_order(row), row, train.labels, train.class_count, cfg.k);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> class_energies(const Eigen::Ref<const Eigen::VectorXd>& dist, const std::vector<int>& labels,
                                   int class_count, int k, double margin) {
  const auto order = neighbor_order(dist);
  std::vector<double> energies(static_cast<std::size_t>(class_count), 0.0);
  for (int c = 0; c < class_count; ++c) {
    std::vector<double> in, out;
    for (int idx : order) {
      auto& bucket = labels[static_cast<std::size_t>(idx)] == c ? in : out;
      if (static_cast<int>(bucket.size()) < k) bucket.push_back(dist(idx));
      if (static_cast<int>(in.size()) == k && static_cast<int>(out.size()) == k) break;
    }
    if (static_cast<int>(in.size()) < k || static_cast<int>(out.size()) < k) {
      throw Error("energy: class " + std::to_string(c) + " (or its complement) has fewer than k members");
    }
    double e = 0.0;
    for (double dj : in) {
      e += dj;
      for (double dl : out) e += std::max(0.0, margin + dj - dl);
    }
    energies[static_cast<std::size_t>(c)] = e;
  }
  return energies;
}

int energy_predict(const LabeledDataset& train, const EnergyConfig& cfg, const Eigen::VectorXd& x) {
  return energy_predict_batch(train, cfg, x.transpose()).front();
}

std::vector<int> energy_predict_batch(const LabeledDataset& train, const EnergyConfig& cfg,
                                      const Eigen::MatrixXd& queries) {
  if (cfg.margin < 0.0) throw Error("energy: margin must be non-negative");
  check_knn(train, cfg.k);
  const Eigen::MatrixXd dist = parallel::squared_distances(queries, train.features, cfg.metric.matrix);
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const auto e = class_energies(dist.row(q).transpose(), train.labels, train.class_count, cfg.k, cfg.margin);
    out[static_cast<std::size_t>(q)] = static_cast<int>(std::min_element(e.begin(), e.end()) - e.begin());
  }
  return out;
}

MarginCandidates margin_candidates(const LabeledDataset& train, const MetricMatrix& m,
                                   const std::vector<double>& beta_grid) {
  if (train.class_count < 2) throw Error("margin_candidates: single-class training set");
  const auto factor = metric_sqrt_transform(m);
  const Eigen::MatrixXd z = factor.apply(train.features);
  const auto n = z.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(z.cols(), z.cols());
  const Eigen::MatrixXd dist = parallel::squared_distances(z, z, id);

  std::vector<double> gaps;
  gaps.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double same = std::numeric_limits<double>::infinity();
    double other = std::numeric_limits<double>::infinity();
    const int yi = train.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (train.labels[static_cast<std::size_t>(j)] == yi) {
        same = std::min(same, dist(i, j));
      } else {
        other = std::min(other, dist(i, j));
      }
    }
    if (!std::isfinite(same) || !std::isfinite(other)) {
      throw Error("margin_candidates: every point needs a same-class and an other-class neighbor");
    }
    gaps.push_back(other - same);
  }
  MarginCandidates out;
  out.gamma0 = linalg::median(gaps);
  for (double beta : beta_grid) out.margins.push_back(std::max(0.0, beta * out.gamma0));
  return out;
}

// ---------------------------------------------------------------------------

double evaluate_error(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (truth.empty()) throw Error("evaluate_error: empty test set");
  if (predictions.size() != truth.size()) throw Error("evaluate_error: size mismatch");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predictions[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

double evaluate_error(const std::function<int(const Eigen::VectorXd&)>& predictor, const LabeledDataset& test) {
  std::vector<int> predictions;
  predictions.reserve(static_cast<std::size_t>(test.size()));
  for (Eigen::Index i = 0; i < test.size(); ++i) predictions.push_back(predictor(test.point(i)));
  return evaluate_error(predictions, test.labels);
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<int> usable_k(const std::vector<int>& grid, int limit) {
  std::vector<int> out;
  for (int k : grid) {
    if (k >= 1 && k <= limit) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw Error("tune_and_test: no usable k in grid");
  return out;
}

std::vector<double> sorted_grid(std::vector<double> grid) {
  if (grid.empty()) throw Error("tune_and_test: empty grid");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// Predictions for each k from one distance matrix; result[k index][query].
std::vector<std::vector<int>> knn_multi_k(const LabeledDataset& train, const Eigen::MatrixXd& dist,
                                          const std::vector<int>& ks) {
  std::vector<std::vector<int>> out(ks.size(), std::vector<int>(static_cast<std::size_t>(dist.rows())));
  for (Eigen::Index q = 0; q < dist.rows(); ++q) {
    const Eigen::VectorXd row = dist.row(q).transpose();
    const auto order = neighbor_order(row);
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      out[ki][static_cast<std::size_t>(q)] = knn_vote(order, row, train.labels, train.class_count, ks[ki]);
    }
  }
  return out;
}

TunedResult tune_knn(const KnnMethod& m, const LabeledDataset& train, const LabeledDataset& validation,
                     const LabeledDataset& test) {
  const auto t0 = Clock::now();
  const auto ks = usable_k(m.k_grid, static_cast<int>(train.size()));
  const Eigen::MatrixXd dval = parallel::squared_distances(validation.features, train.features, m.metric.matrix);
  const auto preds = knn_multi_k(train, dval, ks);
  TunedResult r;
  std::size_t best = 0;
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    const double err = evaluate_error(preds[ki], validation.labels);
    r.grid.push_back({{{"k", ks[ki]}}, err});
    if (err < r.grid[best].validation_error) best = ki;
  }
  r.selected = r.grid[best].params;
  r.validation_error = r.grid[best].validation_error;
  const int k = ks[best];
  r.tuning_seconds = since(t0);
  const auto t1 = Clock::now();
  r.test_predictions = knn_predict_batch(train, KnnConfig{k, m.metric, TieRule::SumDistanceThenIndex}, test.features);
  r.test_error = evaluate_error(r.test_predictions, test.labels);
  r.testing_seconds = since(t1);
  return r;
}

TunedResult tune_glm_int(const GlmIntMethod& m, const LabeledDataset& train, const LabeledDataset& validation,
                         const LabeledDataset& test) {
  const auto t0 = Clock::now();
  GlmIntMethod sorted = m;
  sorted.k_grid = usable_k(m.k_grid, static_cast<int>(train.size()));
  sorted.lambda_grid = sorted_grid(m.lambda_grid);
  const auto preds = glm_int_predictions(train, sorted, validation.features);

  TunedResult r;
  double best_err = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0, best_l = 0;
  // k outer, λ inner: ties resolve to smaller k, then smaller λ.
  for (std::size_t ki = 0; ki < sorted.k_grid.size(); ++ki) {
    for (std::size_t li = 0; li < sorted.lambda_grid.size(); ++li) {
      const double err = evaluate_error(preds[li][ki], validation.labels);
      r.grid.push_back({{{"k", sorted.k_grid[ki]}, {"lambda_int", sorted.lambda_grid[li]}}, err});
      if (err < best_err) {
        best_err = err;
        best_k = ki;
        best_l = li;
      }
    }
  }
  r.selected = {{"k", sorted.k_grid[best_k]}, {"lambda_int", sorted.lambda_grid[best_l]}};
  r.validation_error = best_err;
  r.tuning_seconds = since(t0);
  const auto t1 = Clock::now();
  GlmIntMethod chosen = sorted;
  chosen.k_grid = {sorted.k_grid[best_k]};
  chosen.lambda_grid = {sorted.lambda_grid[best_l]};
  r.test_predictions = glm_int_predictions(train, chosen, test.features)[0][0];
  r.test_error = evaluate_error(r.test_predictions, test.labels);
  r.testing_seconds = since(t1);
  return r;
}

TunedResult tune_energy(const EnergyMethod& m, const LabeledDataset& train, const LabeledDataset& validation,
                        const LabeledDataset& test) {
  const auto t0 = Clock::now();
  const auto counts = train.class_counts();
  const int smallest = *std::min_element(counts.begin(), counts.end());
  const int complement = static_cast<int>(train.size()) - *std::max_element(counts.begin(), counts.end());
  const auto ks = usable_k(m.k_grid, std::min(smallest, complement));
  const auto betas = sorted_grid(m.beta_grid);
  const auto margins = margin_candidates(train, m.metric, betas);
  const Eigen::MatrixXd dval = parallel::squared_distances(validation.features, train.features, m.metric.matrix);

  TunedResult r;
  double best_err = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0, best_b = 0;
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
      std::vector<int> preds(static_cast<std::size_t>(validation.size()));
      for (Eigen::Index q = 0; q < validation.size(); ++q) {
        const auto e = class_energies(dval.row(q).transpose(), train.labels, train.class_count, ks[ki],
                                      margins.margins[bi]);
        preds[static_cast<std::size_t>(q)] = static_cast<int>(std::min_element(e.begin(), e.end()) - e.begin());
      }
      const double err = evaluate_error(preds, validation.labels);
      r.grid.push_back({{{"k", ks[ki]}, {"beta", betas[bi]}, {"margin", margins.margins[bi]}}, err});
      if (err < best_err) {
        best_err = err;
        best_k = ki;
        best_b = bi;
      }
    }
  }
  r.selected = {{"k", ks[best_k]}, {"beta", betas[best_b]}, {"margin", margins.margins[best_b]}, {"gamma0", margins.gamma0}};
  r.validation_error = best_err;
  r.tuning_seconds = since(t0);
  const auto t1 = Clock::now();
  r.test_predictions = energy_predict_batch(train, EnergyConfig{ks[best_k], margins.margins[best_b], m.metric},
                                            test.features);
  r.test_error = evaluate_error(r.test_predictions, test.labels);
  r.testing_seconds = since(t1);
  return r;
}

}  // namespace

std::vector<std::vector<std::vector<int>>> glm_int_predictions(const LabeledDataset& train, const GlmIntMethod& m,
                                                               const Eigen::MatrixXd& queries) {
  for (int k : m.k_grid) check_knn(train, k);
  if (m.models.size() < 2) throw Error("GLM-INT needs at least two class models");
  if (queries.cols() != m.models.dim()) throw Error("GLM-INT: query dimension mismatch");
  const auto nq = static_cast<std::size_t>(queries.rows());
  std::vector<std::vector<std::vector<int>>> out(
      m.lambda_grid.size(), std::vector<std::vector<int>>(m.k_grid.size(), std::vector<int>(nq)));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    try {
      const Eigen::VectorXd x = queries.row(q).transpose();
      const MetricMatrix local = detail::local_metric_at(x, m.models, m.eps_rel, -1);
      for (std::size_t li = 0; li < m.lambda_grid.size(); ++li) {
        const MetricMatrix metric = interpolate_with_euclidean(local, m.lambda_grid[li]);
        Eigen::VectorXd dist(train.size());
        for (Eigen::Index i = 0; i < train.size(); ++i) {
          const Eigen::VectorXd diff = x - train.features.row(i).transpose();
          dist(i) = detail::quad_form(metric.matrix, diff);
        }
        const auto order = neighbor_order(dist);
        for (std::size_t ki = 0; ki < m.k_grid.size(); ++ki) {
          out[li][ki][static_cast<std::size_t>(q)] = knn_vote(order, dist, train.labels, train.class_count, m.k_grid[ki]);
        }
      }
    } catch (...) {
#pragma omp critical(genmetric_glm_int)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

TunedResult tune_and_test(const MethodDescriptor& method, const LabeledDataset& train,
                          const LabeledDataset& validation, const LabeledDataset& test) {
  const auto start = std::chrono::steady_clock::now();
  TunedResult r = std::visit(
      [&](const auto& m) -> TunedResult {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KnnMethod>) {
          return tune_knn(m, train, validation, test);
        } else if constexpr (std::is_same_v<T, GlmIntMethod>) {
          return tune_glm_int(m, train, validation, test);
        } else {
          return tune_energy(m, train, validation, test);
        }
      },
      method);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace genmetric
