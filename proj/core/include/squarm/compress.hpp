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
#include <vector>

#include "squarm/types.hpp"

namespace squarm {

enum class CompressorKind {
  kIdentity,
  kTopK,
  kRandK,
  kQsgd,
  kScaledSign,
  kSignTopK,
  kQsgdTopK,
};

std::string_view to_string(CompressorKind kind);
/// Throws kParameter on an unknown name.
CompressorKind compressor_kind_from_string(std::string_view name);

struct CompressorSpec {
  CompressorKind kind = CompressorKind::kIdentity;
  /// Kept coordinates for the sparsifying kinds.
  int k = 1;
  /// Quantization levels for the QSGD kinds.
  int s = 1;
  int value_bits = 32;

  bool sparsifies() const;
  bool quantizes() const;
  /// Throws kParameter if the spec cannot be applied to dimension d.
  void validate(int d) const;

  friend bool operator==(const CompressorSpec&, const CompressorSpec&) = default;
};

/// Wire payload of one compressed vector. Sparse kinds carry `support`
/// (ascending indices); dense kinds leave it empty. `values` holds raw reals
/// (identity, top_k, rand_k); `codes` holds signs or signed QSGD levels that
/// are multiplied by `scale` on decode.
struct CompressedMessage {
  CompressorKind kind = CompressorKind::kIdentity;
  int d = 0;
  std::vector<std::uint32_t> support;
  std::vector<double> values;
  std::vector<std::int32_t> codes;
  double scale = 0.0;
  std::uint64_t bit_cost = 0;
};

/// beta_{d,s} = min(d/s^2, sqrt(d)/s), the QSGD variance factor.
double qsgd_variance_factor(int d, int s);

/// Throws kDomain on non-finite input and kParameter on k > d.
CompressedMessage compress(const CompressorSpec& spec, const Vec& x, Rng& rng);
Vec decode(const CompressedMessage& message);

/// Contraction parameter when it has a closed form; empty for the sign
/// kinds, whose omega depends on the input.
std::optional<double> omega_of(const CompressorSpec& spec, int d);

/// Mean of ||x - C(x)||^2 / ||x||^2 over standard-normal draws.
double estimate_contraction(const CompressorSpec& spec, int d, int trials, Rng& rng);

/// Closed-form message size in bits. Throws kContract if `message` was not
/// produced by `spec` at dimension d.
std::uint64_t bit_cost(const CompressorSpec& spec, int d, const CompressedMessage& message);
std::uint64_t bit_cost(const CompressorSpec& spec, int d);

/// ceil(log2(m)) for m >= 1.
int ceil_log2(std::uint64_t m);

/// Indices of the k largest magnitudes; ties go to the lower index. Ascending.
std::vector<std::uint32_t> top_k_indices(const Vec& x, int k);

}  // namespace squarm
