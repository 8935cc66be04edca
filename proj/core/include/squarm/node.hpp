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

#include "squarm/compress.hpp"
#include "squarm/types.hpp"

namespace squarm {

enum class NodeVariant {
  /// Each node keeps one public copy per neighbor.
  kFullCopy,
  /// Each node keeps only s_i = sum_j w_ij xhat_j (self term included).
  kMemEfficient,
};

struct NeighborCopy {
  int node = 0;
  Vec value;
};

/// State of one worker. `x` holds x^(t) between iterations and x^(t+1/2)
/// between local_step and consensus_step.
struct NodeState {
  int index = 0;
  NodeVariant variant = NodeVariant::kFullCopy;
  Vec x;
  Vec v;
  Vec hat_self;
  /// Full-copy variant only; sorted by neighbor index.
  std::vector<NeighborCopy> copies;
  /// Memory-efficient variant only.
  Vec s;
  Rng grad_rng;
  Rng comp_rng;

  /// x = x0, every other vector zero.
  static NodeState make(int index, NodeVariant variant, const Vec& x0,
                        std::span<const int> neighbors, Rng grad_rng, Rng comp_rng);

  /// Public copy of `node` as held here. Full-copy variant only.
  const Vec& copy_of(int node) const;
};

/// v <- beta v + g;  x <- x - eta (beta v + g) using the updated v.
/// Throws kDomain on non-finite g.
void local_step(NodeState& state, const Vec& g, double eta, double beta);

/// ||x - hat_self||^2 > c_t eta^2 (strict). An infinite c_t never fires.
bool should_trigger(const NodeState& state, double c_t, double eta);

/// q = C(x - hat_self); the state itself is not modified.
CompressedMessage encode_update(const NodeState& state, const CompressorSpec& spec, Rng& rng);

/// Applies the decoded message q of `sender` (== state.index for the node's
/// own message). `w_row` is row state.index of W. Throws kInvalidTopology for
/// a sender that is neither self nor a neighbor.
void apply_incoming(NodeState& state, int sender, const Vec& q, std::span<const double> w_row);

/// x <- x + gamma sum_j w_ij (xhat_j - xhat_i).
void consensus_step(NodeState& state, double gamma, std::span<const double> w_row);

}  // namespace squarm
