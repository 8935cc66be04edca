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

#include "squarm/schedule.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "squarm/error.hpp"

namespace squarm {
namespace {

void require_gamma_inputs(double delta, double omega, double lambda) {
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::kParameter, "delta must lie in (0,1]");
  if (!(omega > 0.0 && omega <= 1.0)) throw Error(ErrorKind::kParameter, "omega must lie in (0,1]");
  if (!(lambda > 0.0 && lambda <= 2.0)) {
    throw Error(ErrorKind::kParameter, "lambda must lie in (0,2]");
  }
}

}  // namespace

double LrSchedule::eta_at(std::int64_t t) const {
  if (kind == LrKind::kConstant) return eta;
  return b / (a + static_cast<double>(t));
}

void LrSchedule::validate() const {
  if (!(beta >= 0.0 && beta < 1.0)) throw Error(ErrorKind::kParameter, "beta must lie in [0,1)");
  if (kind == LrKind::kConstant && !(eta > 0.0)) {
    throw Error(ErrorKind::kParameter, "constant learning rate must be > 0");
  }
  if (kind == LrKind::kDecaying && !(b > 0.0 && a >= 1.0)) {
    throw Error(ErrorKind::kParameter, "decaying learning rate needs b > 0 and a >= 1");
  }
}

std::string_view to_string(ThresholdKind kind) {
  switch (kind) {
    case ThresholdKind::kAlways: return "always";
    case ThresholdKind::kNever: return "never";
    case ThresholdKind::kPoly: return "poly";
    case ThresholdKind::kConstEta: return "const_eta";
    case ThresholdKind::kPiecewise: return "piecewise";
  }
  return "unknown";
}

ThresholdKind threshold_kind_from_string(std::string_view name) {
  for (auto kind : {ThresholdKind::kAlways, ThresholdKind::kNever, ThresholdKind::kPoly,
                    ThresholdKind::kConstEta, ThresholdKind::kPiecewise}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::kParameter, "unknown threshold kind '" + std::string(name) + "'");
}

void ThresholdSchedule::validate() const {
  if (!(c0 >= 0.0)) throw Error(ErrorKind::kParameter, "threshold c0 must be >= 0");
  if ((kind == ThresholdKind::kPoly || kind == ThresholdKind::kConstEta) &&
      !(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorKind::kParameter, "threshold epsilon must lie in (0,1]");
  }
  if (kind == ThresholdKind::kPiecewise) {
    if (!(init >= 0.0 && step >= 0.0)) {
      throw Error(ErrorKind::kParameter, "piecewise threshold needs init, step >= 0");
    }
    if (period < 1) throw Error(ErrorKind::kParameter, "piecewise period must be >= 1");
  }
}

double threshold_at(const ThresholdSchedule& sched, std::int64_t t, double eta_t) {
  switch (sched.kind) {
    case ThresholdKind::kAlways:
      return 0.0;
    case ThresholdKind::kNever:
      return std::numeric_limits<double>::infinity();
    case ThresholdKind::kPoly:
      if (sched.c0 == 0.0) return 0.0;
      return sched.c0 * std::pow(static_cast<double>(t), 1.0 - sched.epsilon);
    case ThresholdKind::kConstEta:
      return sched.c0 / std::pow(eta_t, 1.0 - sched.epsilon);
    case ThresholdKind::kPiecewise:
      return sched.init + sched.step * static_cast<double>(t / sched.period);
  }
  return 0.0;
}

double constant_lr(int n, std::int64_t T, double beta) {
  if (T < 1) throw Error(ErrorKind::kParameter, "T must be >= 1");
  return (1.0 - beta) * std::sqrt(static_cast<double>(n) / static_cast<double>(T));
}

double decaying_lr(std::int64_t t, double mu, double beta, double a) {
  if (!(mu > 0.0)) throw Error(ErrorKind::kParameter, "mu must be > 0");
  if (!(a >= 1.0)) throw Error(ErrorKind::kParameter, "a must be >= 1");
  return 16.0 * (1.0 - beta) / (mu * (a + static_cast<double>(t)));
}

double gamma_relaxed(double delta, double omega, double lambda) {
  require_gamma_inputs(delta, omega, lambda);
  const double d2 = delta * delta;
  const double w2 = omega * omega;
  const double l2 = lambda * lambda;
  return 2.0 * delta * w2 * omega / (4.0 * d2 * w2 + d2 + 128.0 * l2 + 24.0 * w2 * l2);
}

double gamma_strong(double delta, double omega, double lambda) {
  require_gamma_inputs(delta, omega, lambda);
  const double l2 = lambda * lambda;
  const double denom =
      64.0 * delta + delta * delta + 16.0 * l2 + 8.0 * delta * l2 - 16.0 * delta * omega;
  return 2.0 * delta * omega / denom;
}

double p_of(double gamma, double delta, std::optional<double> strong_omega) {
  const double p = gamma * delta / 8.0;
  if (strong_omega) {
    const double bound = delta * delta * *strong_omega / 644.0;
    // Relative slack absorbs rounding when the bound is attained (delta = 1,
    // lambda = 2, omega -> 0).
    if (p < bound * (1.0 - 1e-12)) {
      throw Error(ErrorKind::kTheoremConsistency,
                  "p = " + std::to_string(p) + " below delta^2 omega / 644 = " +
                      std::to_string(bound));
    }
  }
  return p;
}

double min_a_strongly_convex(double H, double p, double L, double mu, double beta) {
  if (!(p > 0.0) || !(mu > 0.0) || !(beta < 1.0)) {
    throw Error(ErrorKind::kParameter, "min_a needs p > 0, mu > 0, beta < 1");
  }
  const double local = 5.0 * H / p;
  const double smooth = 128.0 * L / mu;
  const double inner = 16.0 * L * beta * beta;
  const double momentum = 16.0 * inner * inner / (mu * (1.0 - beta));
  return std::max({local, smooth, momentum});
}

double min_T_nonconvex(double L, int n, double beta) {
  if (!(beta < 1.0)) throw Error(ErrorKind::kParameter, "beta must be < 1");
  const double l2n = L * L * n;
  const double b4 = beta * beta * beta * beta;
  return std::max(16.0 * l2n, 8.0 * l2n * b4 / ((1.0 - beta) * (1.0 - beta)));
}

double weighted_avg_weight(double a, std::int64_t t) {
  const double v = a + static_cast<double>(t);
  return v * v;
}

double s_T(double a, std::int64_t T) {
  const double t = static_cast<double>(T);
  // Divide last: the product is a multiple of 6 for integer a, so it stays exact.
  return t * (2.0 * t * t + 6.0 * a * t - 3.0 * t + 6.0 * a * a - 6.0 * a + 1.0) / 6.0;
}

std::int64_t s_T_exact(std::int64_t a, std::int64_t T) {
  // T (2T^2 + 6aT - 3T + 6a^2 - 6a + 1) is always divisible by 6.
  return T * (2 * T * T + 6 * a * T - 3 * T + 6 * a * a - 6 * a + 1) / 6;
}

}  // namespace squarm
