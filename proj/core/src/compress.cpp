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

#include "squarm/compress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "squarm/error.hpp"

namespace squarm {
namespace {

int sign_code(double v) { return (v > 0.0) - (v < 0.0); }

std::vector<std::uint32_t> rand_k_indices(int d, int k, Rng& rng) {
  std::vector<std::uint32_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0u);
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, d - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Stochastic rounding of |v|/norm * s to the adjacent integer levels.
std::int32_t qsgd_level(double v, double norm, int s, Rng& rng) {
  const double r = std::abs(v) / norm * s;
  const double lower = std::floor(r);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto level = static_cast<std::int32_t>(lower) + (u(rng) < r - lower ? 1 : 0);
  level = std::min(level, s);
  return sign_code(v) * level;
}

}  // namespace

std::string_view to_string(CompressorKind kind) {
  switch (kind) {
    case CompressorKind::kIdentity: return "identity";
    case CompressorKind::kTopK: return "top_k";
    case CompressorKind::kRandK: return "rand_k";
    case CompressorKind::kQsgd: return "qsgd";
    case CompressorKind::kScaledSign: return "scaled_sign";
    case CompressorKind::kSignTopK: return "sign_top_k";
    case CompressorKind::kQsgdTopK: return "qsgd_top_k";
  }
  return "unknown";
}

CompressorKind compressor_kind_from_string(std::string_view name) {
  for (auto kind : {CompressorKind::kIdentity, CompressorKind::kTopK, CompressorKind::kRandK,
                    CompressorKind::kQsgd, CompressorKind::kScaledSign,
                    CompressorKind::kSignTopK, CompressorKind::kQsgdTopK}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::kParameter, "unknown compressor kind '" + std::string(name) + "'");
}

bool CompressorSpec::sparsifies() const {
  return kind == CompressorKind::kTopK || kind == CompressorKind::kRandK ||
         kind == CompressorKind::kSignTopK || kind == CompressorKind::kQsgdTopK;
}

bool CompressorSpec::quantizes() const {
  return kind == CompressorKind::kQsgd || kind == CompressorKind::kQsgdTopK;
}

void CompressorSpec::validate(int d) const {
  if (d < 1) throw Error(ErrorKind::kParameter, "dimension must be >= 1");
  if (sparsifies() && (k < 1 || k > d)) {
    throw Error(ErrorKind::kParameter,
                "k=" + std::to_string(k) + " outside [1, d=" + std::to_string(d) + "]");
  }
  if (quantizes() && s < 1) throw Error(ErrorKind::kParameter, "s must be >= 1");
  if (value_bits < 1) throw Error(ErrorKind::kParameter, "value_bits must be >= 1");
}

double qsgd_variance_factor(int d, int s) {
  const double dd = d;
  const double ss = s;
  return std::min(dd / (ss * ss), std::sqrt(dd) / ss);
}

int ceil_log2(std::uint64_t m) {
  int bits = 0;
  while ((std::uint64_t{1} << bits) < m) ++bits;
  return bits;
}

std::vector<std::uint32_t> top_k_indices(const Vec& x, int k) {
  const auto d = static_cast<int>(x.size());
  std::vector<std::uint32_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0u);
  auto larger = [&x](std::uint32_t a, std::uint32_t b) {
    const double ma = std::abs(x[a]);
    const double mb = std::abs(x[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + k, idx.end(), larger);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

CompressedMessage compress(const CompressorSpec& spec, const Vec& x, Rng& rng) {
  const auto d = static_cast<int>(x.size());
  spec.validate(d);
  if (!x.allFinite()) throw Error(ErrorKind::kDomain, "compress input is not finite");

  CompressedMessage msg;
  msg.kind = spec.kind;
  msg.d = d;
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      msg.values.assign(x.data(), x.data() + d);
      break;
    case CompressorKind::kTopK:
    case CompressorKind::kRandK:
      msg.support = spec.kind == CompressorKind::kTopK ? top_k_indices(x, spec.k)
                                                      : rand_k_indices(d, spec.k, rng);
      for (auto i : msg.support) msg.values.push_back(x[i]);
      break;
    case CompressorKind::kQsgd: {
      const double norm = x.norm();
      msg.codes.assign(d, 0);
      if (norm > 0.0) {
        for (int i = 0; i < d; ++i) msg.codes[i] = qsgd_level(x[i], norm, spec.s, rng);
        msg.scale = norm / spec.s;
      }
      break;
    }
    case CompressorKind::kScaledSign:
      msg.codes.resize(d);
      for (int i = 0; i < d; ++i) msg.codes[i] = sign_code(x[i]);
      msg.scale = x.lpNorm<1>() / d;
      break;
    case CompressorKind::kSignTopK: {
      msg.support = top_k_indices(x, spec.k);
      double l1 = 0.0;
      for (auto i : msg.support) {
        msg.codes.push_back(sign_code(x[i]));
        l1 += std::abs(x[i]);
      }
      msg.scale = l1 / spec.k;
      break;
    }
    case CompressorKind::kQsgdTopK: {
      msg.support = top_k_indices(x, spec.k);
      double sq = 0.0;
      for (auto i : msg.support) sq += x[i] * x[i];
      const double norm = std::sqrt(sq);
      msg.codes.assign(spec.k, 0);
      if (norm > 0.0) {
        for (int j = 0; j < spec.k; ++j) {
          msg.codes[j] = qsgd_level(x[msg.support[j]], norm, spec.s, rng);
        }
        const double damping = 1.0 + qsgd_variance_factor(spec.k, spec.s);
        msg.scale = norm / (spec.s * damping);
      }
      break;
    }
  }
  msg.bit_cost = bit_cost(spec, d);
  return msg;
}

Vec decode(const CompressedMessage& message) {
  Vec out = Vec::Zero(message.d);
  switch (message.kind) {
    case CompressorKind::kIdentity:
      for (int i = 0; i < message.d; ++i) out[i] = message.values[i];
      break;
    case CompressorKind::kTopK:
    case CompressorKind::kRandK:
      for (std::size_t j = 0; j < message.support.size(); ++j) {
        out[message.support[j]] = message.values[j];
      }
      break;
    case CompressorKind::kQsgd:
    case CompressorKind::kScaledSign:
      for (int i = 0; i < message.d; ++i) out[i] = message.scale * message.codes[i];
      break;
    case CompressorKind::kSignTopK:
    case CompressorKind::kQsgdTopK:
      for (std::size_t j = 0; j < message.support.size(); ++j) {
        out[message.support[j]] = message.scale * message.codes[j];
      }
      break;
  }
  return out;
}

std::optional<double> omega_of(const CompressorSpec& spec, int d) {
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      return 1.0;
    case CompressorKind::kTopK:
    case CompressorKind::kRandK:
      return static_cast<double>(spec.k) / d;
    case CompressorKind::kQsgd: {
      const double beta = qsgd_variance_factor(d, spec.s);
      if (beta < 1.0) return 1.0 - beta;
      return std::nullopt;
    }
    case CompressorKind::kQsgdTopK: {
      // E||x - C(x)||^2 <= (1 - k/d)||x||^2 + (k/d) beta/(1+beta) ||x||^2
      //                  = (1 - k/(d(1+beta))) ||x||^2,
      // so the contraction parameter is k/(d(1+beta)); the bracket is 1 - omega.
      const double beta = qsgd_variance_factor(spec.k, spec.s);
      return static_cast<double>(spec.k) / (d * (1.0 + beta));
    }
    case CompressorKind::kScaledSign:
      // omega = ||x||_1^2 / (d ||x||_2^2), input dependent.
    case CompressorKind::kSignTopK:
      // omega = max{1/d, (k/d) ||Comp_k(x)||_1^2 / (d ||Comp_k(x)||_2^2)} as
      // commonly quoted; not asserted here, use estimate_contraction.
      return std::nullopt;
  }
  return std::nullopt;
}

double estimate_contraction(const CompressorSpec& spec, int d, int trials, Rng& rng) {
  if (trials < 1) throw Error(ErrorKind::kParameter, "trials must be >= 1");
  spec.validate(d);
  std::normal_distribution<double> normal;
  double total = 0.0;
  Vec x(d);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < d; ++i) x[i] = normal(rng);
    const Vec residual = x - decode(compress(spec, x, rng));
    total += residual.squaredNorm() / x.squaredNorm();
  }
  return total / trials;
}

std::uint64_t bit_cost(const CompressorSpec& spec, int d) {
  const std::uint64_t dd = d;
  const std::uint64_t k = spec.k;
  const std::uint64_t vb = spec.value_bits;
  const std::uint64_t index_bits = ceil_log2(dd);
  const std::uint64_t level_bits = ceil_log2(2 * static_cast<std::uint64_t>(spec.s) + 1);
  switch (spec.kind) {
    case CompressorKind::kIdentity: return dd * vb;
    case CompressorKind::kTopK:
    case CompressorKind::kRandK: return k * (index_bits + vb);
    case CompressorKind::kScaledSign: return dd + vb;
    case CompressorKind::kSignTopK: return k * index_bits + k + vb;
    case CompressorKind::kQsgd: return dd * level_bits + vb;
    case CompressorKind::kQsgdTopK: return k * (index_bits + level_bits) + vb;
  }
  return 0;
}

std::uint64_t bit_cost(const CompressorSpec& spec, int d, const CompressedMessage& message) {
  if (message.kind != spec.kind || message.d != d) {
    throw Error(ErrorKind::kContract, "message was produced by a different compressor spec");
  }
  if (spec.sparsifies() && static_cast<int>(message.support.size()) != spec.k) {
    throw Error(ErrorKind::kContract, "message support size differs from spec k");
  }
  return bit_cost(spec, d);
}

}  // namespace squarm
