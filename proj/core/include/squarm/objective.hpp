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

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "squarm/types.hpp"

namespace squarm {

enum class ObjectiveKind {
  kQuadratic,
  kLeastSquares,
  kLogisticL2,
  kLeastSquaresNonconvex,
};

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(std::string_view name);

/// Rows are samples; `labels` holds the trailing column of the data file
/// (regression target or class label).
struct Dataset {
  Mat features;
  Vec labels;

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

enum class PartitionMode { kIid, kSortedByLabel };
PartitionMode partition_mode_from_string(std::string_view name);

/// iid: shuffle then deal round-robin. sorted_by_label: stable sort by label,
/// then contiguous blocks whose sizes differ by at most one.
std::vector<Dataset> partition_heterogeneous(const Dataset& data, int n, PartitionMode mode,
                                             Rng& rng);

/// One sample per line, comma-separated, last field is the label/target.
Dataset load_dataset(const std::string& path);

struct Optimum {
  Vec x;
  double f = 0.0;
};

/// The n local objectives f_i and their average f = (1/n) sum f_i.
///
/// quadratic:        f_i(x) = 1/2 x'A_i x - b_i'x + c_i, gradient noise is
///                   additive N(0, noise_sigma^2 I).
/// least_squares:    f_i(x) = 1/(2m) sum (a'x - y)^2, minibatch gradients.
/// logistic_l2:      f_i(x) = 1/m sum log(1 + exp(-y a'x)) + mu_reg/2 ||x||^2,
///                   labels y in {-1,+1} (0 is read as -1).
/// least_squares_nonconvex: least_squares + alpha sum_j x_j^2/(1 + x_j^2).
///
/// L upper-bounds the smoothness of every f_i; mu is a strong-convexity
/// constant of f (0 when none is known).
class ObjectiveSet {
 public:
  static ObjectiveSet quadratic(std::vector<Mat> a, std::vector<Vec> b,
                                std::vector<double> offsets, double noise_sigma);
  /// f_i(x) = 1/2 (x - c_i)' A_i (x - c_i).
  static ObjectiveSet centered_quadratic(std::vector<Mat> a, const std::vector<Vec>& centers,
                                         double noise_sigma);
  static ObjectiveSet least_squares(std::vector<Dataset> shards, int batch_size = 1);
  static ObjectiveSet least_squares_nonconvex(std::vector<Dataset> shards, double alpha,
                                              int batch_size = 1);
  static ObjectiveSet logistic_l2(std::vector<Dataset> shards, double mu_reg,
                                  int batch_size = 1);

  ObjectiveKind kind() const { return kind_; }
  int n() const { return n_; }
  int d() const { return d_; }
  double L() const { return smoothness_; }
  double mu() const { return strong_convexity_; }
  double noise_sigma() const { return noise_sigma_; }

  /// Unbiased estimate of grad f_i(x).
  Vec stochastic_grad(int node, const Vec& x, Rng& rng) const;
  Vec local_grad(int node, const Vec& x) const;
  double local_loss(int node, const Vec& x) const;

  Vec full_grad_global(const Vec& x) const;
  double loss(const Vec& x) const;
  /// Closed form for the quadratic kind (throws kNoOptimum if the averaged
  /// Hessian is singular); empty for the sample-based kinds.
  std::optional<Optimum> optimum() const;

 private:
  ObjectiveSet() = default;
  void check_node(int node) const;
  void init_sample_based(ObjectiveKind kind, std::vector<Dataset> shards, int batch_size);

  ObjectiveKind kind_ = ObjectiveKind::kQuadratic;
  int n_ = 0;
  int d_ = 0;
  double smoothness_ = 0.0;
  double strong_convexity_ = 0.0;
  double noise_sigma_ = 0.0;

  // quadratic
  std::vector<Mat> hessians_;
  std::vector<Vec> linear_;
  std::vector<double> offsets_;

  // sample based
  std::vector<Dataset> shards_;
  int batch_size_ = 1;
  double alpha_ = 0.0;
  double mu_reg_ = 0.0;
};

struct QuadraticProblem {
  int n = 8;
  int d = 20;
  /// Spectrum of the averaged Hessian is linspace(mu, mu * condition, d).
  double condition = 10.0;
  double mu = 1.0;
  /// Per-node Hessians are A + spread * E_i with sum_i E_i = 0 and
  /// ||E_i||_2 <= mu / 2, so the average stays exactly A.
  double curvature_spread = 0.0;
  /// Node optima are drawn N(0, center_spread^2 I).
  double center_spread = 1.0;
  double noise_sigma = 0.1;
};

ObjectiveSet synthetic_quadratic(const QuadraticProblem& problem, Rng& rng);

/// Linear-model regression data y = a'x_true + noise, a ~ N(0, I).
Dataset synthetic_regression(int samples, int d, double noise, Rng& rng);
/// Two Gaussian classes (labels 0/1) with means +-shift along a random unit
/// direction.
Dataset synthetic_classification(int samples, int d, double shift, Rng& rng);

/// Rescales g in place so that ||g|| <= max_norm.
void clip_gradient(Vec& g, double max_norm);

}  // namespace squarm
