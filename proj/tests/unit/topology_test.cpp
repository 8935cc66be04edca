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

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "squarm/error.hpp"
#include "squarm/topology.hpp"

namespace squarm {
namespace {

using testing::jacobi_eigenvalues;

// Gap and lambda from the Jacobi oracle.
std::pair<double, double> oracle_spectral(const Mat& w) {
  auto ev = jacobi_eigenvalues(w);
  std::sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  const double lambda_min = *std::min_element(ev.begin(), ev.end());
  return {1.0 - std::abs(ev[1]), 1.0 - lambda_min};
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kConfig;
}

void expect_mixing_invariants(const MixingMatrix& m) {
  const Mat& w = m.weights();
  const int n = m.n();
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-12);
    EXPECT_NEAR(w.col(i).sum(), 1.0, 1e-12);
    for (int j = 0; j < n; ++j) {
      EXPECT_EQ(w(i, j), w(j, i));
      EXPECT_GE(w(i, j), 0.0);
    }
  }
  EXPECT_GT(m.delta(), 0.0);
  EXPECT_LE(m.delta(), 1.0 + 1e-12);
  EXPECT_GT(m.lambda_dev(), 0.0);
  EXPECT_LE(m.lambda_dev(), 2.0 + 1e-12);
}

TEST(Topology, RingStructure) {
  const auto m = build_ring(8, 1.0 / 3.0);
  expect_mixing_invariants(m);
  for (int i = 0; i < 8; ++i) {
    EXPECT_DOUBLE_EQ(m(i, i), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m(i, (i + 1) % 8), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m(i, (i + 7) % 8), 1.0 / 3.0);
    EXPECT_EQ(m(i, (i + 4) % 8), 0.0);
    EXPECT_EQ(m.neighbors(i).size(), 2u);
    EXPECT_TRUE(std::is_sorted(m.neighbors(i).begin(), m.neighbors(i).end()));
  }
}

TEST(Topology, RingSpectrumMatchesAnalyticAndOracle) {
  for (int n : {4, 5, 8, 16, 31}) {
    for (double self : {1.0 / 3.0, 0.5, 0.8}) {
      const auto m = build_ring(n, self);
      const double side = (1.0 - self) / 2.0;
      double second = 0.0;
      double smallest = 1.0;
      for (int k = 1; k < n; ++k) {
        const double ev = self + 2.0 * side * std::cos(2.0 * std::numbers::pi * k / n);
        second = std::max(second, std::abs(ev));
        smallest = std::min(smallest, ev);
      }
      EXPECT_NEAR(m.delta(), 1.0 - second, 1e-12) << "n=" << n;
      EXPECT_NEAR(m.lambda_dev(), 1.0 - smallest, 1e-12);
      const auto [delta, lambda] = oracle_spectral(m.weights());
      EXPECT_NEAR(m.delta(), delta, 1e-10);
      EXPECT_NEAR(m.lambda_dev(), lambda, 1e-10);
    }
  }
}

TEST(Topology, WorkedSpectralExamples) {
  EXPECT_NEAR(build_ring(8).delta(), 0.19526214587563503, 1e-12);
  EXPECT_NEAR(build_ring(8).lambda_dev(), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(build_ring(8, 0.5).delta(), 1.0 - (0.5 + 0.5 * std::cos(std::numbers::pi / 4)), 1e-12);
  const auto tri = build_ring(3);
  EXPECT_NEAR(tri.delta(), 1.0, 1e-12);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(tri(i, j), 1.0 / 3.0, 1e-15);
}

TEST(Topology, RingErrors) {
  EXPECT_EQ(kind_of([] { build_ring(2); }), ErrorKind::kInvalidTopology);
  EXPECT_EQ(kind_of([] { build_ring(5, 1.0); }), ErrorKind::kParameter);
}

TEST(Topology, CompleteGraph) {
  for (int n : {2, 4, 8}) {
    const auto m = build_complete(n);
    expect_mixing_invariants(m);
    EXPECT_NEAR(m.delta(), 1.0, 1e-12);
    EXPECT_NEAR(m.lambda_dev(), 1.0, 1e-12);
    EXPECT_NEAR(m(0, n - 1), 1.0 / n, 1e-15);
  }
  EXPECT_EQ(kind_of([] { build_complete(1); }), ErrorKind::kInvalidTopology);
}

TEST(Topology, CustomReproducesRing) {
  for (int n : {3, 6, 9}) {
    const auto ring = build_ring(n, 0.4);
    const auto edges = ring.entries();
    const auto selfs = ring.self_weights();
    const auto again = build_custom(n, edges, selfs);
    EXPECT_TRUE(again.weights() == ring.weights());
  }
}

TEST(Topology, CustomExamples) {
  const std::vector<WeightedEdge> pair = {{0, 1, 0.5}, {1, 0, 0.5}};
  const std::vector<double> half = {0.5, 0.5};
  EXPECT_NEAR(build_custom(2, pair, half).delta(), 1.0, 1e-12);

  std::vector<WeightedEdge> ring4;
  for (int i = 0; i < 4; ++i) {
    ring4.push_back({i, (i + 1) % 4, 0.25});
    ring4.push_back({(i + 1) % 4, i, 0.25});
  }
  const std::vector<double> selfs4(4, 0.5);
  EXPECT_NEAR(build_custom(4, ring4, selfs4).delta(), 0.5, 1e-12);
}

TEST(Topology, CustomErrors) {
  // Star with asymmetric weights.
  const std::vector<WeightedEdge> star = {{0, 1, 0.3}, {1, 0, 0.2}, {0, 2, 0.2}, {2, 0, 0.2}};
  const std::vector<double> star_self = {0.5, 0.8, 0.8};
  EXPECT_EQ(kind_of([&] { build_custom(3, star, star_self); }), ErrorKind::kSymmetry);

  const std::vector<WeightedEdge> split = {{0, 1, 0.5}, {1, 0, 0.5}, {2, 3, 0.5}, {3, 2, 0.5}};
  const std::vector<double> split_self(4, 0.5);
  EXPECT_EQ(kind_of([&] { build_custom(4, split, split_self); }), ErrorKind::kConnectivity);

  const std::vector<WeightedEdge> heavy = {{0, 1, 0.6}, {1, 0, 0.6}};
  const std::vector<double> heavy_self = {0.5, 0.5};
  EXPECT_EQ(kind_of([&] { build_custom(2, heavy, heavy_self); }), ErrorKind::kStochasticity);

  const std::vector<WeightedEdge> dup = {{0, 1, 0.5}, {0, 1, 0.5}, {1, 0, 0.5}};
  EXPECT_EQ(kind_of([&] { build_custom(2, dup, std::vector<double>{0.5, 0.5}); }), ErrorKind::kInvalidTopology);

  const std::vector<WeightedEdge> out = {{0, 5, 0.5}};
  EXPECT_EQ(kind_of([&] { build_custom(2, out, std::vector<double>{0.5, 0.5}); }), ErrorKind::kInvalidTopology);
}

TEST(Topology, FromDenseRejectsIdentityAndNegatives) {
  EXPECT_EQ(kind_of([] { MixingMatrix::from_dense(Mat::Identity(3, 3)); }),
            ErrorKind::kConnectivity);
  Mat neg(2, 2);
  neg << 1.5, -0.5, -0.5, 1.5;
  EXPECT_EQ(kind_of([&] { MixingMatrix::from_dense(neg); }), ErrorKind::kInvalidTopology);
  // Bipartite swap: connected but |lambda_n| = 1.
  Mat swap(2, 2);
  swap << 0.0, 1.0, 1.0, 0.0;
  EXPECT_EQ(kind_of([&] { MixingMatrix::from_dense(swap); }), ErrorKind::kInvalidTopology);
}

TEST(Topology, SpectralQuantitiesOfAveraging) {
  const auto s = spectral_quantities(Mat::Constant(5, 5, 0.2));
  EXPECT_NEAR(s.delta, 1.0, 1e-12);
  EXPECT_NEAR(s.lambda_dev, 1.0, 1e-12);
}

TEST(Topology, PowerDeviationMatchesGeometricDecay) {
  for (int n : {4, 8, 16}) {
    const auto m = build_ring(n);
    const Mat j = Mat::Constant(n, n, 1.0 / n);
    Mat power = Mat::Identity(n, n);
    for (int k = 0; k <= 10; ++k) {
      const double expected = std::pow(1.0 - m.delta(), k);
      EXPECT_NEAR(power_deviation(m.weights(), k), expected, 1e-8);
      const auto ev = jacobi_eigenvalues(power - j);
      const double oracle = std::max(std::abs(ev.front()), std::abs(ev.back()));
      EXPECT_NEAR(oracle, expected, 1e-8);
      power = power * m.weights();
    }
  }
  EXPECT_NEAR(power_deviation(Mat::Constant(4, 4, 0.25), 1), 0.0, 1e-12);
  EXPECT_NEAR(power_deviation(build_ring(8).weights(), 3), std::pow(0.80473785412436497, 3), 1e-12);
  EXPECT_NEAR(power_deviation(build_ring(8).weights(), 0), 1.0, 1e-12);
}

}  // namespace
}  // namespace squarm
