#include "genmetric/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "genmetric/error.hpp"
#include "genmetric/linalg.hpp"

namespace genmetric {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, delim)) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? std::string{} : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

}  // namespace

std::vector<int> LabeledDataset::class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

LabeledDataset LabeledDataset::subset(const std::vector<int>& indices) const {
  LabeledDataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), dim());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(indices[r]);
    out.labels.push_back(labels[static_cast<std::size_t>(indices[r])]);
  }
  out.class_count = class_count;
  out.names = names;
  out.label_values = label_values;
  out.single_class = single_class;
  return out;
}

void LabeledDataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1) throw Error("dataset must have at least one row and one column");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) throw Error("label count does not match row count");
  for (int y : labels) {
    if (y < 0 || y >= class_count) throw Error("label " + std::to_string(y) + " outside [0, class_count)");
  }
  if (!features.allFinite()) throw Error("dataset contains NaN or Inf");
}

LabeledDataset make_dataset(Eigen::MatrixXd features, const std::vector<double>& raw_labels,
                            std::vector<std::string> names) {
  std::vector<double> values(raw_labels);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  LabeledDataset ds;
  ds.features = std::move(features);
  ds.names = std::move(names);
  ds.labels.reserve(raw_labels.size());
  for (double v : raw_labels) {
    ds.labels.push_back(static_cast<int>(std::lower_bound(values.begin(), values.end(), v) - values.begin()));
  }
  ds.class_count = static_cast<int>(values.size());
  ds.label_values = std::move(values);
  ds.single_class = ds.class_count == 1;
  ds.validate();
  return ds;
}

LabeledDataset load_csv(const std::string& path, const LabelColumn& label_column, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file: " + path);

  std::string line;
  std::vector<std::string> header;
  std::size_t row_number = 0;
  if (options.has_header) {
    if (!std::getline(in, line)) throw Error("empty dataset: " + path);
    header = split_line(line, options.delimiter);
    ++row_number;
  }

  std::vector<std::vector<double>> rows;
  std::size_t width = header.size();
  while (std::getline(in, line)) {
    ++row_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line, options.delimiter);
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw Error("row " + std::to_string(row_number) + " has " + std::to_string(cells.size()) + " cells, expected " +
                  std::to_string(width));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (!parse_double(cells[c], row[c])) {
        throw Error("non-numeric cell at (" + std::to_string(row_number) + ", " + std::to_string(c) + ")");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("empty dataset: " + path);

  std::size_t label_index = 0;
  if (const auto* name = std::get_if<std::string>(&label_column)) {
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw Error("label column '" + *name + "' not found in header");
    label_index = static_cast<std::size_t>(it - header.begin());
  } else {
    const int idx = std::get<int>(label_column);
    if (idx < 0 || static_cast<std::size_t>(idx) >= width) throw Error("label column index out of range");
    label_index = static_cast<std::size_t>(idx);
  }
  if (width < 2) throw Error("CSV needs at least one feature column besides the label");

  Eigen::MatrixXd features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  std::vector<double> raw_labels;
  raw_labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_index) continue;
      features(static_cast<Eigen::Index>(r), col++) = rows[r][c];
    }
    raw_labels.push_back(rows[r][label_index]);
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_index) names.push_back(header[c]);
  }
  return make_dataset(std::move(features), raw_labels, std::move(names));
}

void write_csv(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write CSV file: " + path);
  out.precision(17);
  for (Eigen::Index c = 0; c < ds.dim(); ++c) {
    out << (static_cast<std::size_t>(c) < ds.names.size() ? ds.names[static_cast<std::size_t>(c)]
                                                          : "x" + std::to_string(c))
        << ',';
  }
  out << "label\n";
  for (Eigen::Index r = 0; r < ds.size(); ++r) {
    for (Eigen::Index c = 0; c < ds.dim(); ++c) out << ds.features(r, c) << ',';
    const int y = ds.labels[static_cast<std::size_t>(r)];
    if (static_cast<std::size_t>(y) < ds.label_values.size()) {
      out << ds.label_values[static_cast<std::size_t>(y)] << '\n';
    } else {
      out << y << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd ScaleParams::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != min.size()) throw Error("scale params dimension mismatch");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double range = max(c) - min(c);
    if (range > 0.0) {
      out.col(c) = (2.0 * (x.col(c).array() - min(c)) / range - 1.0).matrix();
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

LabeledDataset ScaleParams::apply(const LabeledDataset& ds) const {
  LabeledDataset out = ds;
  out.features = apply(ds.features);
  return out;
}

ScaleParams fit_scale(const LabeledDataset& ds) {
  return {ds.features.colwise().minCoeff().transpose(), ds.features.colwise().maxCoeff().transpose()};
}

std::pair<LabeledDataset, ScaleParams> scale_features(const LabeledDataset& ds) {
  ScaleParams params = fit_scale(ds);
  return {params.apply(ds), std::move(params)};
}

// ---------------------------------------------------------------------------

void SplitSpec::validate() const {
  for (double f : {train, validation, test}) {
    if (!(f > 0.0 && f < 1.0)) throw Error("split fractions must lie in (0, 1)");
  }
  if (std::abs(train + validation + test - 1.0) > 1e-12) throw Error("split fractions must sum to 1");
}

namespace {

// Sizes for n items: rounded train and validation shares, remainder to test.
std::array<int, 3> portion_sizes(int n, const SplitSpec& spec) {
  const int n_train = static_cast<int>(std::lround(spec.train * n));
  const int n_val = static_cast<int>(std::lround(spec.validation * n));
  return {n_train, n_val, n - n_train - n_val};
}

}  // namespace

Split split(const LabeledDataset& ds, const SplitSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(ds.size());
  std::mt19937_64 rng(spec.seed);
  std::vector<int> train_idx, val_idx, test_idx;

  auto deal = [&](std::vector<int> pool) {
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto sizes = portion_sizes(static_cast<int>(pool.size()), spec);
    const auto a = pool.begin() + sizes[0];
    const auto b = a + sizes[1];
    train_idx.insert(train_idx.end(), pool.begin(), a);
    val_idx.insert(val_idx.end(), a, b);
    test_idx.insert(test_idx.end(), b, pool.end());
  };

  if (spec.stratified) {
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.class_count));
    for (int i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].size() < 3) {
        throw Error("infeasible stratification: class " + std::to_string(c) + " has fewer than 3 members");
      }
      const auto sizes = portion_sizes(static_cast<int>(by_class[c].size()), spec);
      if (sizes[0] < 1 || sizes[1] < 1 || sizes[2] < 1) {
        throw Error("infeasible stratification: class " + std::to_string(c) + " cannot fill every portion");
      }
    }
    for (auto& members : by_class) deal(std::move(members));
  } else {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    deal(std::move(all));
  }
  if (train_idx.empty() || val_idx.empty() || test_idx.empty()) throw Error("split produced an empty portion");

  Split out;
  out.train = ds.subset(train_idx);
  out.validation = ds.subset(val_idx);
  out.test = ds.subset(test_idx);
  out.train_indices = std::move(train_idx);
  out.validation_indices = std::move(val_idx);
  out.test_indices = std::move(test_idx);
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd ProjectionParams::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw Error("projection dimension mismatch");
  return (x.rowwise() - mean.transpose()) * components;
}

LabeledDataset ProjectionParams::apply(const LabeledDataset& ds) const {
  LabeledDataset out = ds;
  out.features = apply(ds.features);
  out.names.clear();
  return out;
}

ProjectionParams fit_pca(const LabeledDataset& train, int target_dim) {
  const auto d_in = static_cast<int>(train.dim());
  if (target_dim < 1 || target_dim > d_in) {
    throw Error("PCA target dimension " + std::to_string(target_dim) + " outside [1, " + std::to_string(d_in) + "]");
  }
  ProjectionParams p;
  p.mean = train.features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = train.features.rowwise() - p.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(train.size());
  const auto eig = linalg::eigh(cov);
  const double total = std::max(eig.values.sum(), 0.0);
  p.components.resize(d_in, target_dim);
  p.explained_variance.resize(target_dim);
  for (int j = 0; j < target_dim; ++j) {
    const Eigen::Index src = d_in - 1 - j;  // descending
    p.components.col(j) = eig.vectors.col(src);
    p.explained_variance(j) = total > 0.0 ? std::max(eig.values(src), 0.0) / total : 0.0;
  }
  return p;
}

PcaResult pca_reduce(const LabeledDataset& train, int target_dim, const std::vector<LabeledDataset>& others) {
  PcaResult out;
  out.params = fit_pca(train, target_dim);
  out.train = out.params.apply(train);
  for (const auto& ds : others) out.others.push_back(out.params.apply(ds));
  return out;
}

// ---------------------------------------------------------------------------

LabeledDataset make_synthetic_mixture(const std::vector<MixtureComponent>& components, int n, std::uint64_t seed) {
  if (components.empty()) throw Error("mixture needs at least one component");
  if (n < 1) throw Error("mixture sample count must be positive");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw Error("mixture weights must be non-negative");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("mixture weights must sum to 1");

  const auto dim = components.front().mean.size();
  std::vector<Eigen::MatrixXd> factors;
  for (const auto& c : components) {
    if (c.mean.size() != dim || c.covariance.rows() != dim || c.covariance.cols() != dim) {
      throw Error("mixture component dimension mismatch");
    }
    if (linalg::relative_asymmetry(c.covariance) > 1e-12) throw Error("mixture covariance is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) throw Error("mixture covariance is not positive definite");
    factors.emplace_back(llt.matrixL());
  }

  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  for (const auto& c : components) weights.push_back(c.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd x(n, dim);
  std::vector<double> raw_labels(static_cast<std::size_t>(n));
  Eigen::VectorXd z(dim);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(pick(rng));
    for (Eigen::Index j = 0; j < dim; ++j) z(j) = normal(rng);
    x.row(i) = (components[k].mean + factors[k] * z).transpose();
    raw_labels[static_cast<std::size_t>(i)] = components[k].label;
  }
  return make_dataset(std::move(x), raw_labels);
}

std::vector<MixtureComponent> three_normal_preset() {
  constexpr int kDim = 10;
  constexpr double kSpacing = 2.0;
  // Shared covariance R·diag(v)·Rᵀ with variances log-spaced over [0.05, 8]
  // and a fixed random rotation R.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(kDim, kDim);
  for (int r = 0; r < kDim; ++r)
    for (int c = 0; c < kDim; ++c) g(r, c) = normal(rng);
  const Eigen::MatrixXd rotation = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd variances(kDim);
  for (int j = 0; j < kDim; ++j) variances(j) = 0.05 * std::pow(8.0 / 0.05, j / static_cast<double>(kDim - 1));
  const Eigen::MatrixXd cov = linalg::symmetrize(rotation * variances.asDiagonal() * rotation.transpose());

  std::vector<MixtureComponent> out;
  for (int c = 0; c < 3; ++c) {
    MixtureComponent comp;
    comp.weight = 1.0 / 3.0;
    comp.mean = Eigen::VectorXd::Zero(kDim);
    comp.mean(c) = kSpacing;
    comp.covariance = cov;
    comp.label = c;
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace genmetric
