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

#include "squarm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace squarm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::kConfig, key + ": " + why);
}

// Runs fn(i) for every node; exceptions are collected per node and the first
// one (in node order) is rethrown after the barrier.
template <typename Fn>
void for_each_node(int n, bool parallel, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Schedules {
  LrSchedule lr;
  bool weighted_average = false;
};

Schedules resolve_lr(const RunConfig& cfg, const ObjectiveSet& obj, int n, double p,
                     DerivedConstants& constants) {
  Schedules out;
  out.lr.beta = cfg.beta;
  switch (cfg.lr.kind) {
    case LrSource::kConstant:
      out.lr.kind = LrKind::kConstant;
      out.lr.eta = cfg.lr.eta;
      break;
    case LrSource::kAutoConstant:
      out.lr.kind = LrKind::kConstant;
      out.lr.eta = constant_lr(n, cfg.T, cfg.beta);
      break;
    case LrSource::kDecaying:
      out.lr.kind = LrKind::kDecaying;
      out.lr.b = cfg.lr.b;
      out.lr.a = cfg.lr.a;
      break;
    case LrSource::kAutoDecaying: {
      const double mu = cfg.lr.mu.value_or(obj.mu());
      if (!(mu > 0.0)) config_error("lr.mu", "auto_decaying needs a strong-convexity constant > 0");
      out.lr.kind = LrKind::kDecaying;
      out.lr.a = std::max(1.0, min_a_strongly_convex(static_cast<double>(cfg.H), p, obj.L(), mu,
                                                     cfg.beta));
      out.lr.b = 16.0 * (1.0 - cfg.beta) / mu;
      break;
    }
  }
  if (out.lr.kind == LrKind::kDecaying) {
    out.weighted_average = true;
    constants.lr_a = out.lr.a;
    constants.lr_b = out.lr.b;
  }
  constants.eta0 = out.lr.eta_at(0);
  return out;
}

double resolve_gamma(const RunConfig& cfg, const MixingMatrix& w, const CompressorSpec& spec,
                     int d, DerivedConstants& constants) {
  constants.omega = omega_of(spec, d);
  if (cfg.gamma.kind == GammaSource::kExplicit) {
    constants.gamma = cfg.gamma.value;
    constants.p = p_of(constants.gamma, w.delta());
    return constants.gamma;
  }
  const std::optional<double> omega = cfg.gamma.omega ? cfg.gamma.omega : constants.omega;
  if (!omega) {
    config_error("gamma.omega", "compressor '" + std::string(to_string(spec.kind)) +
                                    "' has no closed-form omega; supply gamma.omega or an "
                                    "explicit gamma.value");
  }
  const double lambda = std::min(w.lambda_dev(), 2.0);
  if (cfg.gamma.kind == GammaSource::kAutoStrong) {
    constants.gamma = gamma_strong(w.delta(), *omega, lambda);
    constants.p = p_of(constants.gamma, w.delta(), *omega);
  } else {
    constants.gamma = gamma_relaxed(w.delta(), *omega, lambda);
    constants.p = p_of(constants.gamma, w.delta());
  }
  if (!(constants.gamma > 0.0 && constants.gamma <= 1.0)) {
    config_error("gamma.kind", "derived consensus step " + std::to_string(constants.gamma) +
                                   " lies outside (0,1]");
  }
  return constants.gamma;
}

Vec initial_point(const InitConfig& init, int d, std::uint64_t seed, int node) {
  switch (init.kind) {
    case InitKind::kZeros:
      return Vec::Zero(d);
    case InitKind::kConstant:
      return Vec::Constant(d, init.value);
    case InitKind::kGaussian: {
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(node), StreamPurpose::kInit);
      std::normal_distribution<double> normal(0.0, init.value);
      Vec x(d);
      for (int j = 0; j < d; ++j) x[j] = normal(rng);
      return x;
    }
  }
  return Vec::Zero(d);
}

}  // namespace

MixingMatrix TopologyConfig::build() const {
  switch (kind) {
    case TopologyKind::kRing:
      return build_ring(n, self_weight);
    case TopologyKind::kComplete:
      return build_complete(n);
    case TopologyKind::kCustom:
      return build_custom(n, edges, self_weights);
  }
  throw Error(ErrorKind::kInvalidTopology, "unknown topology kind");
}

ObjectiveSet ObjectiveConfig::build(int n, std::uint64_t seed) const {
  Rng rng = make_stream(seed, 0, StreamPurpose::kData);
  if (kind == ObjectiveKind::kQuadratic) {
    QuadraticProblem problem;
    problem.n = n;
    problem.d = d;
    problem.condition = condition;
    problem.mu = mu;
    problem.curvature_spread = curvature_spread;
    problem.center_spread = center_spread;
    problem.noise_sigma = noise_sigma;
    return synthetic_quadratic(problem, rng);
  }
  Dataset data;
  if (!dataset_path.empty()) {
    data = load_dataset(dataset_path);
  } else if (kind == ObjectiveKind::kLogisticL2) {
    data = synthetic_classification(samples_per_node * n, d, 1.0, rng);
  } else {
    data = synthetic_regression(samples_per_node * n, d, 0.1, rng);
  }
  auto shards = partition_heterogeneous(data, n, partition_mode, rng);
  switch (kind) {
    case ObjectiveKind::kLeastSquares:
      return ObjectiveSet::least_squares(std::move(shards), batch_size);
    case ObjectiveKind::kLeastSquaresNonconvex:
      return ObjectiveSet::least_squares_nonconvex(std::move(shards), alpha, batch_size);
    case ObjectiveKind::kLogisticL2:
      return ObjectiveSet::logistic_l2(std::move(shards), mu_reg, batch_size);
    case ObjectiveKind::kQuadratic:
      break;
  }
  throw Error(ErrorKind::kParameter, "unknown objective kind");
}

CompressorSpec CompressorConfig::resolve(int d) const {
  CompressorSpec spec;
  spec.kind = kind;
  spec.s = s;
  spec.value_bits = value_bits;
  if (k) {
    spec.k = *k;
  } else if (k_fraction) {
    spec.k = std::max(1, static_cast<int>(std::lround(*k_fraction * d)));
  } else {
    spec.k = d;
  }
  try {
    spec.validate(d);
  } catch (const Error& e) {
    config_error(k ? "compressor.k" : "compressor", e.what());
  }
  return spec;
}

std::int64_t RunConfig::effective_eval_every() const {
  return eval_every > 0 ? eval_every : std::max<std::int64_t>(1, T / 200);
}

void RunConfig::validate() const {
  if (H < 1) config_error("H", "must be >= 1");
  if (T < 1) config_error("T", "must be >= 1");
  if (!(beta >= 0.0 && beta < 1.0)) config_error("beta", "must lie in [0,1)");
  if (eval_every < 0) config_error("eval_every", "must be >= 0");
  if (!(link_rate_bps > 0.0)) config_error("link_rate_bps", "must be > 0");
  if (topology.kind == TopologyKind::kRing && topology.n < 3) config_error("topology.n", "ring needs n >= 3");
  if (topology.n < 2) config_error("topology.n", "must be >= 2");
  if (objective.d < 1) config_error("objective.d", "must be >= 1");
  if (!(objective.noise_sigma >= 0.0)) config_error("objective.noise_sigma", "must be >= 0");
  if (objective.clip_norm && !(*objective.clip_norm > 0.0)) {
    config_error("objective.clip_norm", "must be > 0");
  }
  if (compressor.k && *compressor.k < 1) config_error("compressor.k", "must be >= 1");
  if (compressor.k_fraction && !(*compressor.k_fraction > 0.0 && *compressor.k_fraction <= 1.0)) {
    config_error("compressor.k_fraction", "must lie in (0,1]");
  }
  if (compressor.s < 1) config_error("compressor.s", "must be >= 1");
  if (compressor.value_bits < 1) config_error("compressor.value_bits", "must be >= 1");
  if (gamma.kind == GammaSource::kExplicit && !(gamma.value > 0.0 && gamma.value <= 1.0)) {
    config_error("gamma.value", "must lie in (0,1]");
  }
  if (gamma.omega && !(*gamma.omega > 0.0 && *gamma.omega <= 1.0)) {
    config_error("gamma.omega", "must lie in (0,1]");
  }
  if (lr.kind == LrSource::kConstant && !(lr.eta > 0.0)) config_error("lr.eta", "must be > 0");
  if (lr.kind == LrSource::kDecaying) {
    if (!(lr.b > 0.0)) config_error("lr.b", "must be > 0");
    if (!(lr.a >= 1.0)) config_error("lr.a", "must be >= 1");
  }
  try {
    threshold.validate();
  } catch (const Error& e) {
    config_error("threshold", e.what());
  }
}

std::vector<std::int64_t> sync_indices(std::int64_t T, std::int64_t H) {
  if (H < 1) throw Error(ErrorKind::kParameter, "H must be >= 1");
  std::vector<std::int64_t> out;
  for (std::int64_t t = 0; t < T; t += H) out.push_back(t);
  return out;
}

double bits_to_seconds(std::uint64_t bits, double link_rate_bps) {
  if (!(link_rate_bps > 0.0)) throw Error(ErrorKind::kParameter, "link rate must be > 0");
  return static_cast<double>(bits) / link_rate_bps;
}

Vec mean_of(std::span<const Vec> xs) {
  Vec m = Vec::Zero(xs.front().size());
  for (const auto& x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

double consensus_error(std::span<const Vec> xs) {
  const Vec m = mean_of(xs);
  double total = 0.0;
  for (const auto& x : xs) total += (x - m).squaredNorm();
  return total;
}

double mean_preservation_check(std::span<const Vec> before, std::span<const Vec> after) {
  return (mean_of(after) - mean_of(before)).cwiseAbs().maxCoeff();
}

VirtualSequence::VirtualSequence(double eta, double beta) : eta_(eta), beta_(beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw Error(ErrorKind::kParameter, "virtual sequence needs beta in [0,1)");
  }
}

Vec VirtualSequence::point(std::span<const NodeState> nodes) const {
  Vec xbar = Vec::Zero(nodes.front().x.size());
  Vec vbar = Vec::Zero(xbar.size());
  for (const auto& node : nodes) {
    xbar += node.x;
    vbar += node.v;
  }
  const double inv_n = 1.0 / static_cast<double>(nodes.size());
  return xbar * inv_n - (eta_ * beta_ * beta_ / (1.0 - beta_)) * (vbar * inv_n);
}

void VirtualSequence::reset(std::span<const NodeState> nodes) { tilde_ = point(nodes); }

double VirtualSequence::advance(std::span<const NodeState> nodes, std::span<const Vec> grads) {
  Vec gbar = Vec::Zero(tilde_.size());
  for (const auto& g : grads) gbar += g;
  gbar /= static_cast<double>(grads.size());
  const Vec predicted = tilde_ - (eta_ / (1.0 - beta_)) * gbar;
  tilde_ = point(nodes);
  return (tilde_ - predicted).cwiseAbs().maxCoeff();
}

double virtual_residual(std::span<const NodeState> before, std::span<const NodeState> after,
                        double eta, double beta, std::span<const Vec> grads) {
  VirtualSequence seq(eta, beta);
  seq.reset(before);
  return seq.advance(after, grads);
}

RunResult run(const RunConfig& config, const RunHooks& hooks) {
  config.validate();
  const MixingMatrix w = config.topology.build();
  const ObjectiveSet objective = config.objective.build(w.n(), config.seed);
  return run(config, w, objective, hooks);
}

RunResult run(const RunConfig& config, const MixingMatrix& w, const ObjectiveSet& objective,
              const RunHooks& hooks) {
  config.validate();
  const int n = w.n();
  if (objective.n() != n) config_error("topology.n", "objective has a different node count");
  const int d = objective.d();
  const CompressorSpec spec = config.compressor.resolve(d);

  RunResult result;
  result.config = config;
  auto& constants = result.constants;
  constants.delta = w.delta();
  constants.lambda = w.lambda_dev();
  constants.L = objective.L();
  constants.mu = objective.mu();
  constants.bits_per_message = bit_cost(spec, d);
  const double gamma = resolve_gamma(config, w, spec, d, constants);
  const Schedules sched = resolve_lr(config, objective, n, constants.p, constants);
  try {
    if (auto opt = objective.optimum()) constants.f_star = opt->f;
  } catch (const Error&) {
    // No closed-form optimum; metrics do not need one.
  }

  std::vector<NodeState> nodes;
  nodes.reserve(n);
  for (int i = 0; i < n; ++i) {
    nodes.push_back(NodeState::make(
        i, config.variant, initial_point(config.init, d, config.seed, i), w.neighbors(i),
        make_stream(config.seed, i, StreamPurpose::kGradient),
        make_stream(config.seed, i, StreamPurpose::kCompression)));
  }

  std::vector<Vec> grads(n, Vec::Zero(d));
  std::vector<Vec> half(n, Vec::Zero(d));
  std::vector<Vec> hat_before(n, Vec::Zero(d));
  std::vector<Vec> incoming(n, Vec::Zero(d));
  std::vector<char> triggered(n, 0);
  std::vector<Vec> xs(n);

  const bool track_virtual = config.diagnostics && sched.lr.kind == LrKind::kConstant;
  std::optional<VirtualSequence> virtual_seq;
  if (track_virtual) {
    virtual_seq.emplace(sched.lr.eta, config.beta);
    virtual_seq->reset(nodes);
  }
  Vec weighted_sum = Vec::Zero(d);
  double weight_total = 0.0;
  double residual_since_row = 0.0;
  const std::int64_t eval_every = config.effective_eval_every();
  auto& diag = result.diagnostics;

  auto collect_x = [&] {
    for (int i = 0; i < n; ++i) xs[i] = nodes[i].x;
  };

  for (std::int64_t t = 0; t < config.T; ++t) {
    const double eta = sched.lr.eta_at(t);
    if (sched.weighted_average) {
      collect_x();
      const double wt = weighted_avg_weight(sched.lr.a, t);
      weighted_sum += wt * mean_of(xs);
      weight_total += wt;
    }

    for_each_node(n, config.parallel, [&](int i) {
      Vec g = objective.stochastic_grad(i, nodes[i].x, nodes[i].grad_rng);
      if (config.objective.clip_norm) clip_gradient(g, *config.objective.clip_norm);
      local_step(nodes[i], g, eta, config.beta);
      grads[i] = std::move(g);
    });

    // (t+1) in I_T; 0 in I_T is never reached because t+1 >= 1.
    const bool synchronized = (t + 1) % config.H == 0;
    double c_t = 0.0;
    if (synchronized) {
      c_t = threshold_at(config.threshold, t, eta);
      for (int i = 0; i < n; ++i) {
        half[i] = nodes[i].x;
        hat_before[i] = nodes[i].hat_self;
      }
      for_each_node(n, config.parallel, [&](int i) {
        triggered[i] = should_trigger(nodes[i], c_t, eta) ? 1 : 0;
        if (triggered[i]) {
          incoming[i] = decode(encode_update(nodes[i], spec, nodes[i].comp_rng));
        }
      });
      for (int i = 0; i < n; ++i) {
        if (triggered[i]) {
          const std::uint64_t copies =
              config.accounting == Accounting::kBroadcast ? 1 : w.neighbors(i).size();
          ++result.total_triggers;
          result.total_messages += copies;
          result.total_bits += copies * constants.bits_per_message;
        } else if (!std::isinf(c_t) &&
                   (half[i] - hat_before[i]).squaredNorm() > c_t * eta * eta) {
          ++diag.drift_violations;
        }
      }
      for_each_node(n, config.parallel, [&](int i) {
        const auto row = w.row(i);
        if (triggered[i]) apply_incoming(nodes[i], i, incoming[i], row);
        for (int j : w.neighbors(i)) {
          if (triggered[j]) apply_incoming(nodes[i], j, incoming[j], row);
        }
        consensus_step(nodes[i], gamma, row);
      });
      ++diag.sync_rounds;
      if (config.diagnostics) {
        collect_x();
        diag.max_mean_deviation =
            std::max(diag.max_mean_deviation, mean_preservation_check(half, xs));
      }
    }

    if (track_virtual) {
      const double r = virtual_seq->advance(nodes, grads);
      residual_since_row = std::max(residual_since_row, r);
      diag.max_virtual_residual = std::max(diag.max_virtual_residual, r);
    }

    const bool record = t == 0 || t == config.T - 1 || (t + 1) % eval_every == 0;
    if (record) {
      collect_x();
      const Vec xbar = mean_of(xs);
      MetricsRow row;
      row.t = t;
      row.loss = objective.loss(xbar);
      row.grad_norm_sq = objective.full_grad_global(xbar).squaredNorm();
      row.consensus = consensus_error(xs);
      row.bits_cum = result.total_bits;
      row.messages = result.total_messages;
      row.triggers = result.total_triggers;
      row.virtual_residual = track_virtual ? residual_since_row : kNaN;
      row.weighted_avg_loss =
          sched.weighted_average ? objective.loss(weighted_sum / weight_total) : kNaN;
      residual_since_row = 0.0;
      result.rows.push_back(row);
      if (!std::isfinite(row.loss)) {
        result.final_mean = xbar;
        throw DivergenceError("loss became non-finite at t=" + std::to_string(t),
                              std::move(result));
      }
    }

    if (hooks.on_step) {
      StepView view;
      view.t = t;
      view.synchronized = synchronized;
      view.eta = eta;
      view.c_t = c_t;
      view.nodes = nodes;
      view.half_step = half;
      view.hat_before = hat_before;
      view.grads = grads;
      view.triggered = triggered;
      hooks.on_step(view);
    }
  }

  collect_x();
  result.final_mean = mean_of(xs);
  if (sched.weighted_average) result.final_weighted_avg = weighted_sum / weight_total;
  return result;
}

}  // namespace squarm
