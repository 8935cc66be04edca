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

#include "squarm/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "squarm/error.hpp"

namespace squarm {
namespace {

bool connected(const Mat& w) {
  const int n = static_cast<int>(w.rows());
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j = 0; j < n; ++j) {
      if (j != i && !seen[j] && w(i, j) > 0.0) {
        seen[j] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == n;
}

double spectral_norm_symmetric(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "symmetric eigensolver did not converge");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

MixingMatrix::MixingMatrix(Mat w, SpectralQuantities s)
    : w_(std::move(w)), spectral_(s), neighbors_(w_.rows()) {
  for (int i = 0; i < n(); ++i) {
    for (int j = 0; j < n(); ++j) {
      if (j != i && w_(i, j) > 0.0) neighbors_[i].push_back(j);
    }
  }
}

MixingMatrix MixingMatrix::from_dense(Mat w, double stochastic_tol) {
  const auto n = w.rows();
  if (n < 2 || w.cols() != n) {
    throw Error(ErrorKind::kInvalidTopology, "mixing matrix must be square with n >= 2");
  }
  if (!w.allFinite() || (w.array() < 0.0).any()) {
    throw Error(ErrorKind::kInvalidTopology, "weights must be finite and nonnegative");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(w(i, j) - w(j, i)) > 1e-12) {
        throw Error(ErrorKind::kSymmetry, "w[" + std::to_string(i) + "][" +
                                              std::to_string(j) + "] != w[" +
                                              std::to_string(j) + "][" +
                                              std::to_string(i) + "]");
      }
      w(j, i) = w(i, j);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > stochastic_tol ||
        std::abs(w.col(i).sum() - 1.0) > stochastic_tol) {
      throw Error(ErrorKind::kStochasticity,
                  "row/column " + std::to_string(i) + " does not sum to 1");
    }
  }
  if (!connected(w)) {
    throw Error(ErrorKind::kConnectivity, "communication graph is disconnected");
  }
  const auto s = spectral_quantities(w);
  if (!(s.delta > 1e-12)) {
    throw Error(ErrorKind::kInvalidTopology, "spectral gap is zero (|lambda_n| = 1)");
  }
  return MixingMatrix(std::move(w), s);
}

std::vector<WeightedEdge> MixingMatrix::entries() const {
  std::vector<WeightedEdge> out;
  for (int i = 0; i < n(); ++i) {
    for (int j : neighbors_[i]) out.push_back({i, j, w_(i, j)});
  }
  return out;
}

std::vector<double> MixingMatrix::self_weights() const {
  std::vector<double> out(n());
  for (int i = 0; i < n(); ++i) out[i] = w_(i, i);
  return out;
}

MixingMatrix build_ring(int n, double self_weight) {
  if (n < 3) throw Error(ErrorKind::kInvalidTopology, "ring needs n >= 3");
  if (!(self_weight > 0.0 && self_weight < 1.0)) {
    throw Error(ErrorKind::kParameter, "ring self_weight must lie in (0,1)");
  }
  const double side = (1.0 - self_weight) / 2.0;
  Mat w = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) = self_weight;
    // n == 3 makes the two ring neighbours distinct, so += is never needed.
    w(i, (i + 1) % n) = side;
    w(i, (i + n - 1) % n) = side;
  }
  return MixingMatrix::from_dense(std::move(w), 1e-12);
}

MixingMatrix build_complete(int n) {
  if (n < 2) throw Error(ErrorKind::kInvalidTopology, "complete graph needs n >= 2");
  return MixingMatrix::from_dense(Mat::Constant(n, n, 1.0 / n), 1e-12);
}

MixingMatrix build_custom(int n, std::span<const WeightedEdge> edges,
                          std::span<const double> self_weights) {
  if (n < 2) throw Error(ErrorKind::kInvalidTopology, "custom graph needs n >= 2");
  if (static_cast<int>(self_weights.size()) != n) {
    throw Error(ErrorKind::kInvalidTopology, "need one self weight per node");
  }
  Mat w = Mat::Zero(n, n);
  std::vector<bool> set(static_cast<std::size_t>(n) * n, false);
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n || e.i == e.j) {
      throw Error(ErrorKind::kInvalidTopology, "edge endpoints out of range");
    }
    auto slot = static_cast<std::size_t>(e.i) * n + e.j;
    if (set[slot]) throw Error(ErrorKind::kInvalidTopology, "duplicate edge entry");
    set[slot] = true;
    w(e.i, e.j) = e.w;
  }
  for (int i = 0; i < n; ++i) w(i, i) = self_weights[i];
  return MixingMatrix::from_dense(std::move(w));
}

SpectralQuantities spectral_quantities(const Mat& w) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(w, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "symmetric eigensolver did not converge");
  }
  // Ascending signed eigenvalues.
  Vec eig = solver.eigenvalues();
  std::vector<double> mags(eig.data(), eig.data() + eig.size());
  for (auto& m : mags) m = std::abs(m);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  SpectralQuantities out;
  out.delta = mags.size() > 1 ? 1.0 - mags[1] : 1.0;
  out.lambda_dev = 1.0 - eig.minCoeff();
  return out;
}

double power_deviation(const Mat& w, int k) {
  if (k < 0) throw Error(ErrorKind::kParameter, "power exponent must be >= 0");
  const auto n = w.rows();
  Mat power = Mat::Identity(n, n);
  for (int i = 0; i < k; ++i) power = power * w;
  power.array() -= 1.0 / static_cast<double>(n);
  // W^k stays symmetric up to rounding; symmetrize before the solver.
  Mat sym = 0.5 * (power + power.transpose());
  return spectral_norm_symmetric(sym);
}

}  // namespace squarm
