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
#include <optional>
#include <string_view>

namespace squarm {

enum class LrKind { kConstant, kDecaying };

/// eta_t = eta (constant) or b / (a + t) (decaying).
struct LrSchedule {
  LrKind kind = LrKind::kConstant;
  double eta = 0.01;
  double b = 1.0;
  double a = 1.0;
  double beta = 0.0;

  double eta_at(std::int64_t t) const;
  /// Throws kParameter when the invariants (eta > 0; b > 0, a >= 1;
  /// beta in [0,1)) do not hold.
  void validate() const;
};

enum class ThresholdKind { kAlways, kNever, kPoly, kConstEta, kPiecewise };

std::string_view to_string(ThresholdKind kind);
ThresholdKind threshold_kind_from_string(std::string_view name);

/// Triggering threshold c_t. A node communicates iff its drift from its
/// public copy exceeds c_t * eta_t^2.
struct ThresholdSchedule {
  ThresholdKind kind = ThresholdKind::kAlways;
  double c0 = 0.0;
  double epsilon = 0.5;
  /// piecewise: c_t = init + step * floor(t / period).
  double init = 2.5;
  double step = 1.5;
  std::int64_t period = 1000;

  void validate() const;
};

/// always -> 0; never -> +infinity (the trigger test can never pass);
/// poly -> c0 t^(1-eps); const_eta -> c0 / eta^(1-eps); piecewise as above.
double threshold_at(const ThresholdSchedule& sched, std::int64_t t, double eta_t);

/// (1 - beta) sqrt(n / T).
double constant_lr(int n, std::int64_t T, double beta);
/// 16 (1 - beta) / (mu (a + t)).
double decaying_lr(std::int64_t t, double mu, double beta, double a);

/// Consensus step size under the relaxed variance/dissimilarity assumptions:
/// 2 delta omega^3 / (4 delta^2 omega^2 + delta^2 + 128 lambda^2 + 24 omega^2 lambda^2).
double gamma_relaxed(double delta, double omega, double lambda);
/// Consensus step size under bounded second moments:
/// 2 delta omega / (64 delta + delta^2 + 16 lambda^2 + 8 delta lambda^2 - 16 delta omega).
double gamma_strong(double delta, double omega, double lambda);

/// p = gamma delta / 8. When `strong_omega` is given, gamma is taken to come
/// from gamma_strong with that omega and p >= delta^2 omega / 644 is asserted
/// (kTheoremConsistency on failure).
double p_of(double gamma, double delta, std::optional<double> strong_omega = std::nullopt);

/// max{5H/p, 128L/mu, 16 (16 L beta^2)^2 / (mu (1 - beta))}.
double min_a_strongly_convex(double H, double p, double L, double mu, double beta);
/// max{16 L^2 n, 8 L^2 beta^4 n / (1 - beta)^2}.
double min_T_nonconvex(double L, int n, double beta);

/// w_t = (a + t)^2.
double weighted_avg_weight(double a, std::int64_t t);
/// S_T = T/6 (2T^2 + 6aT - 3T + 6a^2 - 6a + 1) = sum_{t<T} (a + t)^2.
double s_T(double a, std::int64_t T);
/// Integer evaluation of the same closed form; exact while it fits in int64.
std::int64_t s_T_exact(std::int64_t a, std::int64_t T);

}  // namespace squarm
