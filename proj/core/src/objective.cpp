// Copyright 2026 The squarm Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "squarm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "squarm/error.hpp"

namespace squarm {
namespace {

double max_eigenvalue(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "eigensolver did not converge");
  }
  return solver.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "eigensolver did not converge");
  }
  return solver.eigenvalues().minCoeff();
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double signed_label(double y) { return y > 0.0 ? 1.0 : -1.0; }

Mat random_orthogonal(int d, Rng& rng) {
  std::normal_distribution<double> normal;
  Mat g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  // Fix column signs so Q is Haar distributed.
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kQuadratic: return "quadratic";
    case ObjectiveKind::kLeastSquares: return "least_squares";
    case ObjectiveKind::kLogisticL2: return "logistic_l2";
    case ObjectiveKind::kLeastSquaresNonconvex: return "least_squares_nonconvex";
  }
  return "unknown";
}

ObjectiveKind objective_kind_from_string(std::string_view name) {
  for (auto kind : {ObjectiveKind::kQuadratic, ObjectiveKind::kLeastSquares,
                    ObjectiveKind::kLogisticL2, ObjectiveKind::kLeastSquaresNonconvex}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::kParameter, "unknown objective kind '" + std::string(name) + "'");
}

PartitionMode partition_mode_from_string(std::string_view name) {
  if (name == "iid") return PartitionMode::kIid;
  if (name == "sorted_by_label") return PartitionMode::kSortedByLabel;
  throw Error(ErrorKind::kParameter, "unknown partition mode '" + std::string(name) + "'");
}

std::vector<Dataset> partition_heterogeneous(const Dataset& data, int n, PartitionMode mode,
                                             Rng& rng) {
  const int m = data.size();
  if (m == 0) throw Error(ErrorKind::kPartition, "dataset is empty");
  if (n < 1 || n > m) {
    throw Error(ErrorKind::kPartition,
                "cannot split " + std::to_string(m) + " samples over " + std::to_string(n) +
                    " nodes");
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<int>> assigned(n);
  if (mode == PartitionMode::kIid) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int r = 0; r < m; ++r) assigned[r % n].push_back(order[r]);
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return data.labels[a] < data.labels[b]; });
    int cursor = 0;
    for (int node = 0; node < n; ++node) {
      const int count = m / n + (node < m % n ? 1 : 0);
      assigned[node].assign(order.begin() + cursor, order.begin() + cursor + count);
      cursor += count;
    }
  }
  std::vector<Dataset> shards(n);
  for (int node = 0; node < n; ++node) {
    const auto& rows = assigned[node];
    shards[node].features.resize(static_cast<Eigen::Index>(rows.size()), data.dim());
    shards[node].labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      shards[node].features.row(r) = data.features.row(rows[r]);
      shards[node].labels[r] = data.labels[rows[r]];
    }
  }
  return shards;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kData, "cannot open dataset '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
      } catch (const std::exception&) {
        throw Error(ErrorKind::kData, path + ":" + std::to_string(line_no) +
                                          ": not a number: '" + field + "'");
      }
    }
    if (row.size() < 2) {
      throw Error(ErrorKind::kData,
                  path + ":" + std::to_string(line_no) + ": need features and a label");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::kData, path + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::kData, "dataset '" + path + "' has no samples");
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size() - 1);
  Dataset out{Mat(m, d), Vec(m)};
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) out.features(r, c) = rows[r][c];
    out.labels[r] = rows[r].back();
  }
  return out;
}

ObjectiveSet ObjectiveSet::quadratic(std::vector<Mat> a, std::vector<Vec> b,
                                     std::vector<double> offsets, double noise_sigma) {
  if (a.empty() || a.size() != b.size() || a.size() != offsets.size()) {
    throw Error(ErrorKind::kData, "quadratic needs matching A_i, b_i, c_i per node");
  }
  if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::kParameter, "noise_sigma must be >= 0");
  ObjectiveSet obj;
  obj.kind_ = ObjectiveKind::kQuadratic;
  obj.n_ = static_cast<int>(a.size());
  obj.d_ = static_cast<int>(a.front().rows());
  Mat mean = Mat::Zero(obj.d_, obj.d_);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != obj.d_ || a[i].cols() != obj.d_ || b[i].size() != obj.d_) {
      throw Error(ErrorKind::kData, "quadratic node " + std::to_string(i) + " has wrong shape");
    }
    a[i] = (0.5 * (a[i] + a[i].transpose())).eval();
    obj.smoothness_ = std::max(obj.smoothness_, max_eigenvalue(a[i]));
    mean += a[i];
  }
  mean /= static_cast<double>(obj.n_);
  obj.strong_convexity_ = std::max(0.0, min_eigenvalue(mean));
  obj.noise_sigma_ = noise_sigma;
  obj.hessians_ = std::move(a);
  obj.linear_ = std::move(b);
  obj.offsets_ = std::move(offsets);
  return obj;
}

ObjectiveSet ObjectiveSet::centered_quadratic(std::vector<Mat> a, const std::vector<Vec>& centers,
                                              double noise_sigma) {
  if (a.size() != centers.size()) {
    throw Error(ErrorKind::kData, "need one center per node");
  }
  std::vector<Vec> b(a.size());
  std::vector<double> c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    b[i] = a[i] * centers[i];
    c[i] = 0.5 * centers[i].dot(b[i]);
  }
  return quadratic(std::move(a), std::move(b), std::move(c), noise_sigma);
}

void ObjectiveSet::init_sample_based(ObjectiveKind kind, std::vector<Dataset> shards,
                                     int batch_size) {
  if (shards.empty()) throw Error(ErrorKind::kData, "no shards");
  if (batch_size < 1) throw Error(ErrorKind::kParameter, "batch_size must be >= 1");
  kind_ = kind;
  n_ = static_cast<int>(shards.size());
  d_ = shards.front().dim();
  for (std::size_t i = 0; i < shards.size(); ++i) {
    if (shards[i].size() == 0) {
      throw Error(ErrorKind::kData, "node " + std::to_string(i) + " has an empty dataset");
    }
    if (shards[i].dim() != d_) throw Error(ErrorKind::kData, "shards disagree on dimension");
  }
  shards_ = std::move(shards);
  batch_size_ = batch_size;
}

ObjectiveSet ObjectiveSet::least_squares(std::vector<Dataset> shards, int batch_size) {
  ObjectiveSet obj;
  obj.init_sample_based(ObjectiveKind::kLeastSquares, std::move(shards), batch_size);
  Mat mean = Mat::Zero(obj.d_, obj.d_);
  for (const auto& s : obj.shards_) {
    const Mat h = s.features.transpose() * s.features / static_cast<double>(s.size());
    obj.smoothness_ = std::max(obj.smoothness_, max_eigenvalue(h));
    mean += h;
  }
  obj.strong_convexity_ = std::max(0.0, min_eigenvalue(mean / obj.n_));
  return obj;
}

ObjectiveSet ObjectiveSet::least_squares_nonconvex(std::vector<Dataset> shards, double alpha,
                                                   int batch_size) {
  if (!(alpha >= 0.0)) throw Error(ErrorKind::kParameter, "alpha must be >= 0");
  ObjectiveSet obj = least_squares(std::move(shards), batch_size);
  obj.kind_ = ObjectiveKind::kLeastSquaresNonconvex;
  obj.alpha_ = alpha;
  // |d^2/dx^2 x^2/(1+x^2)| = |2(1 - 3x^2)/(1+x^2)^3| <= 2.
  obj.smoothness_ += 2.0 * alpha;
  obj.strong_convexity_ = 0.0;
  return obj;
}

ObjectiveSet ObjectiveSet::logistic_l2(std::vector<Dataset> shards, double mu_reg,
                                       int batch_size) {
  if (!(mu_reg > 0.0)) throw Error(ErrorKind::kParameter, "mu_reg must be > 0");
  ObjectiveSet obj;
  obj.init_sample_based(ObjectiveKind::kLogisticL2, std::move(shards), batch_size);
  for (const auto& s : obj.shards_) {
    const Mat h = s.features.transpose() * s.features / (4.0 * s.size());
    obj.smoothness_ = std::max(obj.smoothness_, max_eigenvalue(h) + mu_reg);
  }
  obj.mu_reg_ = mu_reg;
  obj.strong_convexity_ = mu_reg;
  return obj;
}

void ObjectiveSet::check_node(int node) const {
  if (node < 0 || node >= n_) {
    throw Error(ErrorKind::kParameter, "node index " + std::to_string(node) + " out of range");
  }
}

Vec ObjectiveSet::local_grad(int node, const Vec& x) const {
  check_node(node);
  if (kind_ == ObjectiveKind::kQuadratic) return hessians_[node] * x - linear_[node];
  const auto& s = shards_[node];
  const double m = s.size();
  Vec g;
  if (kind_ == ObjectiveKind::kLogisticL2) {
    const Vec margins = s.features * x;
    Vec coeff(s.size());
    for (int r = 0; r < s.size(); ++r) {
      const double y = signed_label(s.labels[r]);
      coeff[r] = -y * sigmoid(-y * margins[r]);
    }
    g = s.features.transpose() * coeff / m + mu_reg_ * x;
  } else {
    g = s.features.transpose() * (s.features * x - s.labels) / m;
    if (kind_ == ObjectiveKind::kLeastSquaresNonconvex) {
      for (int j = 0; j < d_; ++j) {
        const double q = 1.0 + x[j] * x[j];
        g[j] += alpha_ * 2.0 * x[j] / (q * q);
      }
    }
  }
  return g;
}

double ObjectiveSet::local_loss(int node, const Vec& x) const {
  check_node(node);
  if (kind_ == ObjectiveKind::kQuadratic) {
    return 0.5 * x.dot(hessians_[node] * x) - linear_[node].dot(x) + offsets_[node];
  }
  const auto& s = shards_[node];
  const Vec margins = s.features * x;
  double total = 0.0;
  if (kind_ == ObjectiveKind::kLogisticL2) {
    for (int r = 0; r < s.size(); ++r) total += softplus(-signed_label(s.labels[r]) * margins[r]);
    return total / s.size() + 0.5 * mu_reg_ * x.squaredNorm();
  }
  total = 0.5 * (margins - s.labels).squaredNorm() / s.size();
  if (kind_ == ObjectiveKind::kLeastSquaresNonconvex) {
    for (int j = 0; j < d_; ++j) total += alpha_ * x[j] * x[j] / (1.0 + x[j] * x[j]);
  }
  return total;
}

Vec ObjectiveSet::stochastic_grad(int node, const Vec& x, Rng& rng) const {
  check_node(node);
  if (kind_ == ObjectiveKind::kQuadratic) {
    Vec g = hessians_[node] * x - linear_[node];
    if (noise_sigma_ > 0.0) {
      std::normal_distribution<double> normal(0.0, noise_sigma_);
      for (int j = 0; j < d_; ++j) g[j] += normal(rng);
    }
    return g;
  }
  const auto& s = shards_[node];
  std::uniform_int_distribution<int> pick(0, s.size() - 1);
  Vec g = Vec::Zero(d_);
  for (int b = 0; b < batch_size_; ++b) {
    const int r = pick(rng);
    const auto a = s.features.row(r).transpose();
    const double margin = a.dot(x);
    if (kind_ == ObjectiveKind::kLogisticL2) {
      const double y = signed_label(s.labels[r]);
      g += -y * sigmoid(-y * margin) * a;
    } else {
      g += (margin - s.labels[r]) * a;
    }
  }
  g /= static_cast<double>(batch_size_);
  if (kind_ == ObjectiveKind::kLogisticL2) g += mu_reg_ * x;
  if (kind_ == ObjectiveKind::kLeastSquaresNonconvex) {
    for (int j = 0; j < d_; ++j) {
      const double q = 1.0 + x[j] * x[j];
      g[j] += alpha_ * 2.0 * x[j] / (q * q);
    }
  }
  return g;
}

Vec ObjectiveSet::full_grad_global(const Vec& x) const {
  Vec g = Vec::Zero(d_);
  for (int i = 0; i < n_; ++i) g += local_grad(i, x);
  return g / static_cast<double>(n_);
}

double ObjectiveSet::loss(const Vec& x) const {
  double total = 0.0;
  for (int i = 0; i < n_; ++i) total += local_loss(i, x);
  return total / n_;
}

std::optional<Optimum> ObjectiveSet::optimum() const {
  if (kind_ != ObjectiveKind::kQuadratic) return std::nullopt;
  Mat a = Mat::Zero(d_, d_);
  Vec b = Vec::Zero(d_);
  for (int i = 0; i < n_; ++i) {
    a += hessians_[i];
    b += linear_[i];
  }
  a /= static_cast<double>(n_);
  b /= static_cast<double>(n_);
  Eigen::SelfAdjointEigenSolver<Mat> solver(a);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "eigensolver did not converge");
  }
  const Vec& eig = solver.eigenvalues();
  if (eig.minCoeff() <= 1e-12 * std::max(1.0, eig.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::kNoOptimum, "averaged Hessian is singular or indefinite");
  }
  Optimum out;
  out.x = a.ldlt().solve(b);
  out.f = loss(out.x);
  return out;
}

ObjectiveSet synthetic_quadratic(const QuadraticProblem& p, Rng& rng) {
  if (p.n < 1 || p.d < 1) throw Error(ErrorKind::kParameter, "need n, d >= 1");
  if (!(p.mu > 0.0) || !(p.condition >= 1.0)) {
    throw Error(ErrorKind::kParameter, "need mu > 0 and condition >= 1");
  }
  const Mat q = random_orthogonal(p.d, rng);
  Vec spectrum(p.d);
  for (int j = 0; j < p.d; ++j) {
    spectrum[j] = p.d == 1 ? p.mu
                           : p.mu * (1.0 + (p.condition - 1.0) * j / static_cast<double>(p.d - 1));
  }
  Mat base = q * spectrum.asDiagonal() * q.transpose();
  base = (0.5 * (base + base.transpose())).eval();

  std::normal_distribution<double> normal;
  std::vector<Mat> perturb(p.n, Mat::Zero(p.d, p.d));
  if (p.curvature_spread > 0.0 && p.n > 1) {
    Mat mean = Mat::Zero(p.d, p.d);
    for (auto& e : perturb) {
      for (int r = 0; r < p.d; ++r)
        for (int c = 0; c < p.d; ++c) e(r, c) = normal(rng);
      e = (0.5 * (e + e.transpose())).eval();  // eval(): e aliases its transpose
      mean += e;
    }
    mean /= static_cast<double>(p.n);
    double largest = 0.0;
    for (auto& e : perturb) {
      e -= mean;
      Eigen::SelfAdjointEigenSolver<Mat> s(e, Eigen::EigenvaluesOnly);
      largest = std::max(largest, s.eigenvalues().cwiseAbs().maxCoeff());
    }
    const double scale = largest > 0.0 ? 0.5 * p.mu / largest : 0.0;
    for (auto& e : perturb) e *= p.curvature_spread * scale;
  }
  std::vector<Mat> hessians;
  std::vector<Vec> centers;
  for (int i = 0; i < p.n; ++i) {
    hessians.push_back(base + perturb[i]);
    Vec c(p.d);
    for (int j = 0; j < p.d; ++j) c[j] = p.center_spread * normal(rng);
    centers.push_back(std::move(c));
  }
  return ObjectiveSet::centered_quadratic(std::move(hessians), centers, p.noise_sigma);
}

Dataset synthetic_regression(int samples, int d, double noise, Rng& rng) {
  std::normal_distribution<double> normal;
  Vec truth(d);
  for (int j = 0; j < d; ++j) truth[j] = normal(rng);
  Dataset out{Mat(samples, d), Vec(samples)};
  for (int r = 0; r < samples; ++r) {
    for (int j = 0; j < d; ++j) out.features(r, j) = normal(rng);
    out.labels[r] = out.features.row(r).dot(truth) + noise * normal(rng);
  }
  return out;
}

Dataset synthetic_classification(int samples, int d, double shift, Rng& rng) {
  std::normal_distribution<double> normal;
  Vec direction(d);
  for (int j = 0; j < d; ++j) direction[j] = normal(rng);
  direction.normalize();
  Dataset out{Mat(samples, d), Vec(samples)};
  for (int r = 0; r < samples; ++r) {
    const double label = r % 2;
    const double sign = label > 0.0 ? 1.0 : -1.0;
    for (int j = 0; j < d; ++j) out.features(r, j) = normal(rng) + sign * shift * direction[j];
    out.labels[r] = label;
  }
  return out;
}

void clip_gradient(Vec& g, double max_norm) {
  const double norm = g.norm();
  if (norm > max_norm) g *= max_norm / norm;
}

}  // namespace squarm
