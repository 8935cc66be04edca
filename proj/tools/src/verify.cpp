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

#include "squarm/cli/verify.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "squarm/engine.hpp"

namespace squarm::cli {
namespace {

class Collector {
 public:
  explicit Collector(std::string suite) : suite_(std::move(suite)) {}

  void check(bool ok, std::string name, std::string detail = {}) {
    results_.push_back({suite_, std::move(name), ok, std::move(detail)});
  }
  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  std::string suite_;
  std::vector<CheckResult> results_;
};

Vec gaussian(int d, Rng& rng) {
  std::normal_distribution<double> normal;
  Vec x(d);
  for (int j = 0; j < d; ++j) x[j] = normal(rng);
  return x;
}

std::vector<CheckResult> verify_compression() {
  Collector c("compression");
  Rng rng = make_stream(2024, 0, StreamPurpose::kCompression);
  for (int kind = 0; kind <= static_cast<int>(CompressorKind::kQsgdTopK); ++kind) {
    for (int d : {8, 64, 256}) {
      CompressorSpec spec;
      spec.kind = static_cast<CompressorKind>(kind);
      spec.k = std::max(1, d / 8);
      spec.s = 4;
      const std::string tag = fmt::format("{} d={}", to_string(spec.kind), d);

      const Vec x = gaussian(d, rng);
      const CompressedMessage msg = compress(spec, x, rng);
      c.check(msg.bit_cost == bit_cost(spec, d), tag + " bit cost",
              fmt::format("message {} vs formula {}", msg.bit_cost, bit_cost(spec, d)));

      if (const auto omega = omega_of(spec, d)) {
        const double ratio = estimate_contraction(spec, d, 2000, rng);
        c.check(ratio <= 1.0 - *omega + 0.02, tag + " contraction",
                fmt::format("E|x-C(x)|^2/|x|^2 = {:.4f}, 1-omega = {:.4f}", ratio, 1.0 - *omega));
      } else if (spec.kind == CompressorKind::kScaledSign) {
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
          const Vec y = gaussian(d, rng);
          const Vec q = decode(compress(spec, y, rng));
          const double lhs = (y - q).squaredNorm();
          const double rhs = y.squaredNorm() - y.lpNorm<1>() * y.lpNorm<1>() / d;
          worst = std::max(worst, std::abs(lhs - rhs) / y.squaredNorm());
        }
        c.check(worst < 1e-9, tag + " residual identity", fmt::format("max rel err {:.3g}", worst));
      } else if (spec.kind == CompressorKind::kQsgd) {
        const double ratio = estimate_contraction(spec, d, 2000, rng);
        const double bound = qsgd_variance_factor(d, spec.s);
        c.check(ratio <= bound + 0.02, tag + " variance bound",
                fmt::format("ratio {:.4f}, bound {:.4f}", ratio, bound));
      } else {
        const double ratio = estimate_contraction(spec, d, 2000, rng);
        c.check(ratio < 1.0, tag + " contraction", fmt::format("ratio {:.4f}", ratio));
      }
    }
  }

  // Unbiasedness of stochastic rounding.
  CompressorSpec qsgd{CompressorKind::kQsgd, 1, 2, 32};
  const int d = 8;
  const int trials = 20000;
  const Vec x = gaussian(d, rng);
  Vec sum = Vec::Zero(d);
  Vec sum_sq = Vec::Zero(d);
  for (int t = 0; t < trials; ++t) {
    const Vec q = decode(compress(qsgd, x, rng));
    sum += q;
    sum_sq += q.cwiseProduct(q);
  }
  const Vec mean = sum / trials;
  double worst_z = 0.0;
  for (int j = 0; j < d; ++j) {
    const double var = std::max(sum_sq[j] / trials - mean[j] * mean[j], 1e-30);
    worst_z = std::max(worst_z, std::abs(mean[j] - x[j]) / std::sqrt(var / trials));
  }
  c.check(worst_z < 5.0, "qsgd unbiased", fmt::format("max |z| = {:.2f}", worst_z));
  return c.take();
}

std::vector<CheckResult> verify_spectral() {
  Collector c("spectral");
  for (int n : {4, 8, 16}) {
    const MixingMatrix w = build_ring(n);
    double second = 0.0;
    double smallest = 1.0;
    for (int k = 1; k < n; ++k) {
      const double ev = 1.0 / 3.0 + 2.0 / 3.0 * std::cos(2.0 * std::numbers::pi * k / n);
      second = std::max(second, std::abs(ev));
      smallest = std::min(smallest, ev);
    }
    const double delta = 1.0 - second;
    c.check(std::abs(w.delta() - delta) < 1e-10, fmt::format("ring n={} gap", n),
            fmt::format("{:.12f} vs analytic {:.12f}", w.delta(), delta));
    c.check(std::abs(w.lambda_dev() - (1.0 - smallest)) < 1e-10,
            fmt::format("ring n={} lambda", n),
            fmt::format("{:.12f} vs analytic {:.12f}", w.lambda_dev(), 1.0 - smallest));
    double worst = 0.0;
    for (int k = 0; k <= 10; ++k) {
      worst = std::max(worst, std::abs(power_deviation(w.weights(), k) - std::pow(1.0 - delta, k)));
    }
    c.check(worst < 1e-8, fmt::format("ring n={} power decay", n), fmt::format("max err {:.3g}", worst));
    const Mat j_minus_i = Mat::Constant(n, n, 1.0 / n) - Mat::Identity(n, n);
    const double norm =
        Eigen::SelfAdjointEigenSolver<Mat>(j_minus_i).eigenvalues().cwiseAbs().maxCoeff();
    c.check(std::abs(norm - 1.0) < 1e-10, fmt::format("n={} |J-I|", n), fmt::format("{:.15f}", norm));
  }
  return c.take();
}

std::vector<CheckResult> verify_identities() {
  Collector c("identities");
  const CompressorKind kinds[] = {CompressorKind::kTopK, CompressorKind::kSignTopK,
                                  CompressorKind::kQsgd};
  int index = 0;
  for (CompressorKind kind : kinds) {
    for (std::int64_t H : {1, 5}) {
      Vec finals[2];
      const int base = index;
      for (NodeVariant variant : {NodeVariant::kFullCopy, NodeVariant::kMemEfficient}) {
        RunConfig cfg;
        cfg.topology.n = 6 + base % 3;
        cfg.objective.d = 12;
        cfg.compressor.kind = kind;
        cfg.compressor.k = 3;
        cfg.H = H;
        cfg.beta = (base / 2) % 2 == 0 ? 0.9 : 0.0;
        cfg.lr.kind = LrSource::kConstant;
        cfg.lr.eta = 0.02;
        cfg.gamma.kind = GammaSource::kExplicit;
        cfg.gamma.value = 0.1;
        cfg.threshold.kind = ThresholdKind::kPiecewise;
        cfg.threshold.period = 50;
        cfg.T = 200;
        cfg.seed = 100 + base;
        cfg.variant = variant;
        cfg.diagnostics = true;
        const RunResult r = run(cfg);
        const std::string tag =
            fmt::format("cfg{:02d} {} H={} beta={} {}", index, to_string(kind), H, cfg.beta,
                        variant == NodeVariant::kFullCopy ? "full" : "mem");
        c.check(r.diagnostics.max_mean_deviation < 1e-10, tag + " mean preserved",
                fmt::format("{:.3g}", r.diagnostics.max_mean_deviation));
        c.check(r.diagnostics.max_virtual_residual < 1e-8, tag + " virtual recurrence",
                fmt::format("{:.3g}", r.diagnostics.max_virtual_residual));
        c.check(r.diagnostics.drift_violations == 0, tag + " trigger drift",
                fmt::format("{} violations", r.diagnostics.drift_violations));
        finals[variant == NodeVariant::kFullCopy ? 0 : 1] = r.final_mean;
        ++index;
      }
      const double diff = (finals[0] - finals[1]).cwiseAbs().maxCoeff();
      c.check(diff < 1e-10, fmt::format("{} H={} variants agree", to_string(kind), H),
              fmt::format("{:.3g}", diff));
    }
  }
  return c.take();
}

std::vector<CheckResult> verify_schedules() {
  Collector c("schedules");
  const double gs = gamma_strong(1.0, 1.0, 1.0);
  const double gr = gamma_relaxed(1.0, 1.0, 1.0);
  c.check(std::abs(gs - 2.0 / 73.0) < 1e-12, "strong gamma at (1,1,1)", fmt::format("{:.17g}", gs));
  c.check(std::abs(gr - 2.0 / 157.0) < 1e-12, "relaxed gamma at (1,1,1)", fmt::format("{:.17g}", gr));

  Rng rng = make_stream(7, 0, StreamPurpose::kInit);
  std::uniform_real_distribution<double> unit(1e-6, 1.0);
  int bad_gamma = 0;
  int bad_p = 0;
  for (int i = 0; i < 1000; ++i) {
    const double delta = unit(rng);
    const double omega = unit(rng);
    const double lambda = 2.0 * unit(rng);
    const double g = gamma_strong(delta, omega, lambda);
    if (!(g <= omega)) ++bad_gamma;
    if (!(g * delta / 8.0 >= delta * delta * omega / 644.0)) ++bad_p;
  }
  c.check(bad_gamma == 0, "strong gamma <= omega", fmt::format("{} of 1000 fail", bad_gamma));
  c.check(bad_p == 0, "p lower bound", fmt::format("{} of 1000 fail", bad_p));

  int bad_sum = 0;
  for (std::int64_t a = 1; a <= 5; ++a) {
    for (std::int64_t T = 1; T <= 50; ++T) {
      std::int64_t direct = 0;
      for (std::int64_t t = 0; t < T; ++t) direct += (a + t) * (a + t);
      if (s_T_exact(a, T) != direct) ++bad_sum;
    }
  }
  c.check(bad_sum == 0, "weight sum closed form", fmt::format("{} of 250 fail", bad_sum));

  const auto idx = sync_indices(20, 5);
  c.check(idx == std::vector<std::int64_t>{0, 5, 10, 15}, "sync indices", "T=20 H=5");
  return c.take();
}

}  // namespace

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names = {"compression", "spectral", "identities",
                                                 "schedules"};
  return names;
}

std::vector<CheckResult> run_verify(std::string_view suite) {
  std::vector<CheckResult> out;
  auto add = [&](std::vector<CheckResult> part) {
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  };
  const bool all = suite == "all";
  bool matched = all;
  if (all || suite == "compression") add(verify_compression()), matched = true;
  if (all || suite == "spectral") add(verify_spectral()), matched = true;
  if (all || suite == "identities") add(verify_identities()), matched = true;
  if (all || suite == "schedules") add(verify_schedules()), matched = true;
  if (!matched) {
    throw Error(ErrorKind::kConfig, "suite: unknown name '" + std::string(suite) + "'");
  }
  return out;
}

}  // namespace squarm::cli
