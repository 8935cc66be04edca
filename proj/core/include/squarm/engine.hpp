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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "squarm/compress.hpp"
#include "squarm/error.hpp"
#include "squarm/node.hpp"
#include "squarm/objective.hpp"
#include "squarm/schedule.hpp"
#include "squarm/topology.hpp"

namespace squarm {

enum class TopologyKind { kRing, kComplete, kCustom };

struct TopologyConfig {
  TopologyKind kind = TopologyKind::kRing;
  int n = 8;
  double self_weight = 1.0 / 3.0;
  std::vector<WeightedEdge> edges;
  std::vector<double> self_weights;

  MixingMatrix build() const;
};

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::kQuadratic;
  int d = 20;
  double noise_sigma = 0.1;
  // quadratic generator
  double condition = 10.0;
  double mu = 1.0;
  double curvature_spread = 0.3;
  double center_spread = 1.0;
  // sample-based kinds
  int samples_per_node = 50;
  PartitionMode partition_mode = PartitionMode::kIid;
  std::string dataset_path;
  double alpha = 0.1;
  double mu_reg = 0.01;
  int batch_size = 1;
  /// Clips every stochastic gradient to this norm (known G by construction).
  std::optional<double> clip_norm;

  /// Data and curvature are drawn from a stream derived from `seed`.
  ObjectiveSet build(int n, std::uint64_t seed) const;
};

struct CompressorConfig {
  CompressorKind kind = CompressorKind::kIdentity;
  std::optional<int> k;
  /// k = max(1, round(k_fraction * d)) when `k` is not set.
  std::optional<double> k_fraction;
  int s = 4;
  int value_bits = 32;

  CompressorSpec resolve(int d) const;
};

enum class LrSource {
  kConstant,
  kDecaying,
  /// (1 - beta) sqrt(n / T).
  kAutoConstant,
  /// 16 (1 - beta) / (mu (a + t)) with a = min_a_strongly_convex.
  kAutoDecaying,
};

struct LrConfig {
  LrSource kind = LrSource::kAutoConstant;
  double eta = 0.01;
  double b = 1.0;
  double a = 1.0;
  /// Overrides the objective's mu for kAutoDecaying.
  std::optional<double> mu;
};

enum class GammaSource { kExplicit, kAutoRelaxed, kAutoStrong };

struct GammaConfig {
  GammaSource kind = GammaSource::kExplicit;
  double value = 1.0;
  /// Required by the auto kinds when the compressor has no closed-form omega.
  std::optional<double> omega;
};

enum class InitKind { kZeros, kConstant, kGaussian };

struct InitConfig {
  InitKind kind = InitKind::kZeros;
  double value = 0.0;
};

enum class Accounting {
  /// One transmission per triggering node per round.
  kBroadcast,
  /// One transmission per neighbor of each triggering node.
  kUnicast,
};

struct RunConfig {
  TopologyConfig topology;
  ObjectiveConfig objective;
  CompressorConfig compressor;
  std::int64_t H = 1;
  double beta = 0.0;
  LrConfig lr;
  GammaConfig gamma;
  ThresholdSchedule threshold;
  std::int64_t T = 1000;
  std::uint64_t seed = 0;
  NodeVariant variant = NodeVariant::kFullCopy;
  Accounting accounting = Accounting::kBroadcast;
  /// 0 means max(1, T / 200).
  std::int64_t eval_every = 0;
  bool diagnostics = false;
  /// Runs node-local phases concurrently; results are bit-identical either way.
  bool parallel = false;
  InitConfig init;
  double link_rate_bps = 100'000.0;

  std::int64_t effective_eval_every() const;
  /// Throws kConfig naming the offending key.
  void validate() const;
};

/// Metrics recorded after iteration t completes (state x^(t+1)).
struct MetricsRow {
  std::int64_t t = 0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;
  double consensus = 0.0;
  std::uint64_t bits_cum = 0;
  std::uint64_t messages = 0;
  std::uint64_t triggers = 0;
  /// Max virtual-sequence defect over the steps since the previous row; NaN
  /// when diagnostics are off or the learning rate is not constant.
  double virtual_residual = 0.0;
  /// f at the (a+t)^2-weighted average of xbar^(0..t); NaN unless decaying lr.
  double weighted_avg_loss = 0.0;
};

struct DerivedConstants {
  double delta = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  double p = 0.0;
  std::optional<double> omega;
  double eta0 = 0.0;
  /// Decaying schedules only.
  std::optional<double> lr_a;
  std::optional<double> lr_b;
  double L = 0.0;
  double mu = 0.0;
  std::optional<double> f_star;
  std::uint64_t bits_per_message = 0;
};

struct Diagnostics {
  double max_virtual_residual = 0.0;
  double max_mean_deviation = 0.0;
  std::uint64_t drift_violations = 0;
  std::uint64_t sync_rounds = 0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  Vec final_mean;
  std::optional<Vec> final_weighted_avg;
  std::uint64_t total_bits = 0;
  std::uint64_t total_messages = 0;
  std::uint64_t total_triggers = 0;
  DerivedConstants constants;
  Diagnostics diagnostics;
  RunConfig config;
};

/// Raised when the loss at the averaged iterate stops being finite; carries
/// everything recorded up to that point.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, RunResult partial)
      : Error(ErrorKind::kDivergence, what), partial_(std::move(partial)) {}
  const RunResult& partial() const { return partial_; }

 private:
  RunResult partial_;
};

/// Read-only view handed to the step observer after every iteration.
struct StepView {
  std::int64_t t = 0;
  bool synchronized = false;
  double eta = 0.0;
  double c_t = 0.0;
  std::span<const NodeState> nodes;
  /// x^(t+1/2) of every node (before consensus).
  std::span<const Vec> half_step;
  /// Public copies before this round's messages were applied.
  std::span<const Vec> hat_before;
  std::span<const Vec> grads;
  std::span<const char> triggered;
};

struct RunHooks {
  std::function<void(const StepView&)> on_step;
};

/// Executes the configured run. Validates `config` first.
RunResult run(const RunConfig& config, const RunHooks& hooks = {});
/// Same, with the topology and objective supplied directly (the config's
/// topology and objective sections are ignored).
RunResult run(const RunConfig& config, const MixingMatrix& w, const ObjectiveSet& objective,
              const RunHooks& hooks = {});

/// Multiples of H below T.
std::vector<std::int64_t> sync_indices(std::int64_t T, std::int64_t H);

double bits_to_seconds(std::uint64_t bits, double link_rate_bps);

/// ||mean(after) - mean(before)||_inf.
double mean_preservation_check(std::span<const Vec> before, std::span<const Vec> after);

/// Tracks xtilde^(t) = xbar^(t) - (eta beta^2 / (1 - beta)) mean(v^(t-1)) and
/// reports the defect of xtilde^(t+1) = xtilde^(t) - eta/(1-beta) mean(g^(t)).
class VirtualSequence {
 public:
  /// Throws kParameter for beta outside [0,1).
  VirtualSequence(double eta, double beta);
  void reset(std::span<const NodeState> nodes);
  /// Call after iteration t with the gradients used in it; returns the
  /// infinity-norm defect.
  double advance(std::span<const NodeState> nodes, std::span<const Vec> grads);
  const Vec& current() const { return tilde_; }

 private:
  Vec point(std::span<const NodeState> nodes) const;

  double eta_;
  double beta_;
  Vec tilde_;
};

/// Standalone form of VirtualSequence::advance for one step.
double virtual_residual(std::span<const NodeState> before, std::span<const NodeState> after,
                        double eta, double beta, std::span<const Vec> grads);

/// Sum_i ||x_i - xbar||^2.
double consensus_error(std::span<const Vec> xs);
Vec mean_of(std::span<const Vec> xs);

}  // namespace squarm
