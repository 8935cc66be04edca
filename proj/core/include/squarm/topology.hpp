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

#include <span>
#include <vector>

#include "squarm/types.hpp"

namespace squarm {

/// Directed weight entry w[i][j]; custom topologies list both directions.
struct WeightedEdge {
  int i = 0;
  int j = 0;
  double w = 0.0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

struct SpectralQuantities {
  /// 1 - |lambda_2(W)| with eigenvalues ordered by magnitude.
  double delta = 0.0;
  /// max_i (1 - lambda_i(W)). Equals ||W - I||_2 for symmetric W whose
  /// eigenvalues are at most 1, so the two definitions are not distinguished.
  double lambda_dev = 0.0;
};

/// Symmetric doubly-stochastic gossip matrix of a connected graph.
/// Immutable once built; the spectral quantities are computed at construction.
class MixingMatrix {
 public:
  int n() const { return static_cast<int>(w_.rows()); }
  const Mat& weights() const { return w_; }
  double operator()(int i, int j) const { return w_(i, j); }
  double delta() const { return spectral_.delta; }
  double lambda_dev() const { return spectral_.lambda_dev; }
  const SpectralQuantities& spectral() const { return spectral_; }

  /// Neighbors of i (w_ij > 0, j != i), ascending.
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  /// Row i of W as a contiguous span (W is symmetric, so column == row).
  std::span<const double> row(int i) const {
    return {w_.data() + static_cast<std::ptrdiff_t>(i) * n(),
            static_cast<std::size_t>(n())};
  }

  /// Off-diagonal nonzero entries in both directions, row-major order.
  std::vector<WeightedEdge> entries() const;
  std::vector<double> self_weights() const;

  /// Validates w and takes ownership. Throws kSymmetry, kStochasticity,
  /// kConnectivity or kInvalidTopology.
  static MixingMatrix from_dense(Mat w, double stochastic_tol = 1e-10);

 private:
  MixingMatrix(Mat w, SpectralQuantities s);

  Mat w_;
  SpectralQuantities spectral_;
  std::vector<std::vector<int>> neighbors_;
};

MixingMatrix build_ring(int n, double self_weight = 1.0 / 3.0);
MixingMatrix build_complete(int n);
MixingMatrix build_custom(int n, std::span<const WeightedEdge> edges,
                          std::span<const double> self_weights);

SpectralQuantities spectral_quantities(const Mat& w);

/// ||W^k - 11^T/n||_2.
double power_deviation(const Mat& w, int k);

}  // namespace squarm
