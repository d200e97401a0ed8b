#include "genmetric/unsupervised.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>

#include "genmetric/error.hpp"
#include "genmetric/global_metric.hpp"
#include "genmetric/kernels.hpp"
#include "genmetric/linalg.hpp"

namespace genmetric {

namespace {

// Squared Euclidean distance from every row of z to center row c of `centers`.
Eigen::VectorXd distances_to(const Eigen::MatrixXd& z, const Eigen::RowVectorXd& center) {
  return (z.rowwise() - center).rowwise().squaredNorm();
}

std::vector<int> nearest(const Eigen::MatrixXd& z, const Eigen::MatrixXd& centers, Eigen::VectorXd& best) {
  const auto n = z.rows();
  std::vector<int> out(static_cast<std::size_t>(n), 0);
  best = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const Eigen::VectorXd d = distances_to(z, centers.row(c));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d(i) < best(i)) {
        best(i) = d(i);
        out[static_cast<std::size_t>(i)] = static_cast<int>(c);
      }
    }
  }
  return out;
}

Eigen::MatrixXd plus_plus_seed(const Eigen::MatrixXd& z, int k, std::mt19937_64& rng) {
  const auto n = z.rows();
  Eigen::MatrixXd centers(k, z.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = z.row(first(rng));
  Eigen::VectorXd closest = distances_to(z, centers.row(0));
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng), acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += closest(i);
        if (acc >= target && closest(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = z.row(pick);
    closest = closest.cwiseMin(distances_to(z, centers.row(c)));
  }
  return centers;
}

struct LloydRun {
  std::vector<int> assignments;
  Eigen::MatrixXd centers;
  double inertia = 0.0;
  std::vector<double> history;
};

LloydRun lloyd(const Eigen::MatrixXd& z, Eigen::MatrixXd centers, int max_iter) {
  const auto n = z.rows();
  const auto k = centers.rows();
  LloydRun run;
  Eigen::VectorXd best;
  for (int it = 0; it < max_iter; ++it) {
    auto assign = nearest(z, centers, best);
    // Empty clusters take the point farthest from its current center.
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] > 1 && best(i) > far_d) {
          far_d = best(i);
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(far)])];
      assign[static_cast<std::size_t>(far)] = static_cast<int>(c);
      counts[static_cast<std::size_t>(c)] = 1;
      best(far) = 0.0;
    }
    double inertia = 0.0;
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, z.cols());
    for (Eigen::Index i = 0; i < n; ++i) next.row(assign[static_cast<std::size_t>(i)]) += z.row(i);
    for (Eigen::Index c = 0; c < k; ++c) next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    for (Eigen::Index i = 0; i < n; ++i) inertia += (z.row(i) - next.row(assign[static_cast<std::size_t>(i)])).squaredNorm();

    if (!run.history.empty() && inertia > run.history.back() * (1.0 + 1e-12) + 1e-12) {
      throw Error("k-means inertia increased during Lloyd iterations");
    }
    run.history.push_back(inertia);
    const bool same = assign == run.assignments;
    run.assignments = std::move(assign);
    run.centers = next;
    run.inertia = inertia;
    centers = std::move(next);
    if (same) break;
  }
  return run;
}

}  // namespace

ClusteringResult kmeans(const Eigen::MatrixXd& x, int k, const MetricMatrix& m, std::uint64_t seed, int restarts,
                        int max_iter) {
  if (k < 1) throw Error("k-means: k must be at least 1");
  if (k > x.rows()) throw Error("k-means: k exceeds the number of points");
  if (restarts < 1 || max_iter < 1) throw Error("k-means: restarts and iterations must be positive");
  if (m.dim() != x.cols()) throw Error("k-means: metric dimension mismatch");

  const Eigen::MatrixXd l = linalg::sqrt_psd(m.matrix);
  const Eigen::MatrixXd z = x * l.transpose();
  std::mt19937_64 rng(seed);
  LloydRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    auto run = lloyd(z, plus_plus_seed(z, k, rng), max_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  ClusteringResult out;
  out.assignments = std::move(best.assignments);
  out.inertia = best.inertia;
  out.inertia_history = std::move(best.history);
  out.metric = m;
  // Centers back in x coordinates: member means (the map x → Lx is linear).
  out.centers = Eigen::MatrixXd::Zero(k, x.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.centers.row(out.assignments[static_cast<std::size_t>(i)]) += x.row(i);
    ++counts[static_cast<std::size_t>(out.assignments[static_cast<std::size_t>(i)])];
  }
  for (int c = 0; c < k; ++c) out.centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  return out;
}

std::vector<int> assign_to_centers(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers, const MetricMatrix& m) {
  if (centers.rows() == 0) throw Error("no centers to assign to");
  if (x.cols() != centers.cols()) throw Error("assign_to_centers: dimension mismatch");
  const Eigen::MatrixXd d = parallel::squared_distances(x, centers, m.matrix);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index c = 0;
    d.row(i).minCoeff(&c);
    out[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  return out;
}

IterativeClusteringResult iterative_metric_kmeans(const Eigen::MatrixXd& x, int k,
                                                  const IterativeClusteringOptions& options) {
  if (options.outer_iters < 1) throw Error("iterative k-means: outer_iters must be at least 1");
  const auto d = x.cols();
  IterativeClusteringResult out;
  out.metric = MetricMatrix::identity(d);
  out.clustering = kmeans(x, k, out.metric, options.seed, options.restarts);
  if (k == 1) {
    out.metric.degenerate = true;
    out.clustering.metric = out.metric;
    return out;
  }

  for (int round = 0; round < options.outer_iters; ++round) {
    LabeledDataset ds;
    ds.features = x;
    ds.labels = out.clustering.assignments;
    ds.class_count = k;
    const auto counts = ds.class_counts();
    int skipped = 0;
    for (int c : counts) skipped += c < 2 ? 1 : 0;
    out.skipped_clusters.push_back(skipped);

    const auto models = fit_gaussian_models(ds, options.lambda_cov, /*skip_small=*/true, 2);
    if (models.size() < 2) break;
    auto locals = compute_all_local_metrics(x, models, options.eps_rel);
    for (auto& m : locals) m = interpolate_with_euclidean(m, options.lambda_int);
    MetricMatrix metric = uniform_combination(locals);
    metric.method = "UNI";

    auto next = kmeans(x, k, metric, options.seed, options.restarts);
    ++out.rounds;
    const bool stable = rand_score(next.assignments, out.clustering.assignments) == 1.0;
    out.metric = std::move(metric);
    out.clustering = std::move(next);
    if (stable) {
      out.stable = true;
      break;
    }
  }
  return out;
}

double rand_score(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error("rand_score: label vectors differ in length");
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) throw Error("rand_score needs at least two points");
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  auto pairs = [](double m) { return 0.5 * m * (m - 1.0); };
  double sa = 0.0, sb = 0.0, sj = 0.0;
  for (const auto& [key, v] : ca) sa += pairs(v);
  for (const auto& [key, v] : cb) sb += pairs(v);
  for (const auto& [key, v] : joint) sj += pairs(v);
  const double total = pairs(n);
  // Agreeing = together in both + apart in both.
  return (total + 2.0 * sj - sa - sb) / total;
}

TransferTuneResult cluster_transfer_tune(const LabeledDataset& train, const LabeledDataset& validation,
                                         const std::vector<double>& lambda_cov_grid,
                                         const std::vector<double>& lambda_int_grid, int k,
                                         const IterativeClusteringOptions& base) {
  if (lambda_cov_grid.empty() || lambda_int_grid.empty()) throw Error("cluster tuning: empty grid");
  TransferTuneResult out;
  out.validation_rand = -1.0;
  bool have = false;
  for (double lc : lambda_cov_grid) {
    for (double li : lambda_int_grid) {
      IterativeClusteringOptions o = base;
      o.lambda_cov = lc;
      o.lambda_int = li;
      auto fit = iterative_metric_kmeans(train.features, k, o);
      const auto assigned = assign_to_centers(validation.features, fit.clustering.centers, fit.metric);
      const double score = rand_score(assigned, validation.labels);
      out.grid.push_back({lc, li, score});
      const bool better = !have || score > out.validation_rand ||
                          (score == out.validation_rand &&
                           (li < out.lambda_int || (li == out.lambda_int && lc < out.lambda_cov)));
      if (better) {
        have = true;
        out.lambda_cov = lc;
        out.lambda_int = li;
        out.validation_rand = score;
        out.model = std::move(fit);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& distances, int dim, Eigen::VectorXd* eigenvalues) {
  const auto n = distances.rows();
  if (distances.cols() != n) throw Error("MDS: distance matrix must be square");
  if (dim < 1 || dim > n) throw Error("MDS: target dimension must lie in [1, N]");
  const Eigen::MatrixXd sq = distances.array().square();
  const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd b = linalg::symmetrize(-0.5 * j * sq * j);
  const auto eig = linalg::eigh(b);
  const double top = std::max(eig.values.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  Eigen::MatrixXd coords(n, dim);
  Eigen::VectorXd vals(dim);
  for (int c = 0; c < dim; ++c) {
    const Eigen::Index idx = n - 1 - c;
    const double lam = eig.values(idx);
    if (!(lam > 1e-12 * top)) throw Error("MDS: target dimension exceeds the number of positive eigenvalues");
    Eigen::VectorXd v = eig.vectors.col(idx);
    // Deterministic sign: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    coords.col(c) = v * std::sqrt(lam);
    vals(c) = lam;
  }
  coords.rowwise() -= coords.colwise().mean();
  if (eigenvalues) *eigenvalues = vals;
  return coords;
}

Embedding isomap_embed(const Eigen::MatrixXd& x, const MetricMatrix& m, int n_neighbors, int dim) {
  const auto n = static_cast<int>(x.rows());
  if (n < 2) throw Error("Isomap needs at least two points");
  if (n_neighbors < 1 || n_neighbors >= n) throw Error("Isomap: neighbor count must lie in [1, N-1]");
  if (m.dim() != x.cols()) throw Error("Isomap: metric dimension mismatch");

  const Eigen::MatrixXd dist = parallel::squared_distances(x, x, m.matrix).cwiseMax(0.0).cwiseSqrt();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> edge = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist(i, a) < dist(i, b); });
    int taken = 0;
    for (int j : order) {
      if (j == i) continue;
      edge(i, j) = edge(j, i) = true;
      if (++taken == n_neighbors) break;
    }
  }

  // Largest connected component (ties → the one holding the lowest index).
  std::vector<int> component(static_cast<std::size_t>(n), -1);
  std::vector<int> sizes;
  for (int s = 0; s < n; ++s) {
    if (component[static_cast<std::size_t>(s)] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    int size = 0;
    std::queue<int> q;
    q.push(s);
    component[static_cast<std::size_t>(s)] = id;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      ++size;
      for (int v = 0; v < n; ++v) {
        if (edge(u, v) && component[static_cast<std::size_t>(v)] < 0) {
          component[static_cast<std::size_t>(v)] = id;
          q.push(v);
        }
      }
    }
    sizes.push_back(size);
  }
  const int keep_id = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  Embedding e;
  e.neighbor_count = n_neighbors;
  std::vector<int> local(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (component[static_cast<std::size_t>(i)] == keep_id) {
      local[static_cast<std::size_t>(i)] = static_cast<int>(e.kept.size());
      e.kept.push_back(i);
    }
  }
  e.excluded = n - static_cast<int>(e.kept.size());
  if (dim > static_cast<int>(e.kept.size())) throw Error("Isomap: target dimension exceeds the component size");

  AdjacencyList graph(e.kept.size());
  for (std::size_t a = 0; a < e.kept.size(); ++a) {
    const int i = e.kept[a];
    for (int j = 0; j < n; ++j) {
      if (edge(i, j)) graph[a].emplace_back(local[static_cast<std::size_t>(j)], dist(i, j));
    }
  }
  e.geodesics = parallel::shortest_paths(graph);
  e.coordinates = classical_mds(e.geodesics, dim, &e.eigenvalues);

  // Residual variance 1 − r² between geodesic and embedded distances.
  const auto k = static_cast<Eigen::Index>(e.kept.size());
  std::vector<double> g, h;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      g.push_back(e.geodesics(i, j));
      h.push_back((e.coordinates.row(i) - e.coordinates.row(j)).norm());
    }
  }
  if (g.size() >= 2) {
    const Eigen::Map<const Eigen::ArrayXd> ga(g.data(), static_cast<Eigen::Index>(g.size()));
    const Eigen::Map<const Eigen::ArrayXd> ha(h.data(), static_cast<Eigen::Index>(h.size()));
    const Eigen::ArrayXd gc = ga - ga.mean(), hc = ha - ha.mean();
    const double denom = std::sqrt((gc * gc).sum() * (hc * hc).sum());
    const double r = denom > 0.0 ? (gc * hc).sum() / denom : 1.0;
    e.residual_variance = std::max(0.0, 1.0 - r * r);
  }
  return e;
}

void write_embedding_csv(const std::string& path, const Embedding& e, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write embedding CSV: " + path);
  out.precision(17);
  out << "id";
  for (Eigen::Index c = 0; c < e.coordinates.cols(); ++c) out << ",x" << c;
  out << ",label\n";
  for (std::size_t r = 0; r < e.kept.size(); ++r) {
    const int id = e.kept[r];
    out << id;
    for (Eigen::Index c = 0; c < e.coordinates.cols(); ++c) out << ',' << e.coordinates(static_cast<Eigen::Index>(r), c);
    out << ',' << (static_cast<std::size_t>(id) < labels.size() ? labels[static_cast<std::size_t>(id)] : -1) << '\n';
  }
}

void write_clusters_csv(const std::string& path, const std::vector<int>& clusters, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cluster CSV: " + path);
  out << "id,cluster,label\n";
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    out << i << ',' << clusters[i] << ',' << (i < labels.size() ? labels[i] : -1) << '\n';
  }
}

}  // namespace genmetric
