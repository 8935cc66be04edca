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

#include "squarm/node.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "squarm/error.hpp"

namespace squarm {
namespace {

NeighborCopy* find_copy(std::vector<NeighborCopy>& copies, int node) {
  auto it = std::lower_bound(copies.begin(), copies.end(), node,
                             [](const NeighborCopy& c, int j) { return c.node < j; });
  return it != copies.end() && it->node == node ? &*it : nullptr;
}

}  // namespace

NodeState NodeState::make(int index, NodeVariant variant, const Vec& x0,
                          std::span<const int> neighbors, Rng grad_rng, Rng comp_rng) {
  NodeState st;
  st.index = index;
  st.variant = variant;
  st.x = x0;
  st.v = Vec::Zero(x0.size());
  st.hat_self = Vec::Zero(x0.size());
  st.grad_rng = std::move(grad_rng);
  st.comp_rng = std::move(comp_rng);
  if (variant == NodeVariant::kFullCopy) {
    std::vector<int> sorted(neighbors.begin(), neighbors.end());
    std::sort(sorted.begin(), sorted.end());
    for (int j : sorted) st.copies.push_back({j, Vec::Zero(x0.size())});
  } else {
    st.s = Vec::Zero(x0.size());
  }
  return st;
}

const Vec& NodeState::copy_of(int node) const {
  auto it = std::lower_bound(copies.begin(), copies.end(), node,
                             [](const NeighborCopy& c, int j) { return c.node < j; });
  if (it == copies.end() || it->node != node) {
    throw Error(ErrorKind::kInvalidTopology,
                "node " + std::to_string(index) + " holds no copy of " + std::to_string(node));
  }
  return it->value;
}

void local_step(NodeState& state, const Vec& g, double eta, double beta) {
  if (!g.allFinite()) throw Error(ErrorKind::kDomain, "stochastic gradient is not finite");
  state.v = beta * state.v + g;
  state.x -= eta * (beta * state.v + g);
}

bool should_trigger(const NodeState& state, double c_t, double eta) {
  if (std::isinf(c_t)) return false;
  return (state.x - state.hat_self).squaredNorm() > c_t * eta * eta;
}

CompressedMessage encode_update(const NodeState& state, const CompressorSpec& spec, Rng& rng) {
  return compress(spec, state.x - state.hat_self, rng);
}

void apply_incoming(NodeState& state, int sender, const Vec& q, std::span<const double> w_row) {
  if (sender == state.index) {
    state.hat_self += q;
    if (state.variant == NodeVariant::kMemEfficient) state.s += w_row[sender] * q;
    return;
  }
  if (state.variant == NodeVariant::kFullCopy) {
    NeighborCopy* copy = find_copy(state.copies, sender);
    if (copy == nullptr) {
      throw Error(ErrorKind::kInvalidTopology, "node " + std::to_string(state.index) +
                                                   " got a message from non-neighbor " +
                                                   std::to_string(sender));
    }
    copy->value += q;
    return;
  }
  if (sender < 0 || static_cast<std::size_t>(sender) >= w_row.size() || w_row[sender] <= 0.0) {
    throw Error(ErrorKind::kInvalidTopology, "node " + std::to_string(state.index) +
                                                 " got a message from non-neighbor " +
                                                 std::to_string(sender));
  }
  state.s += w_row[sender] * q;
}

void consensus_step(NodeState& state, double gamma, std::span<const double> w_row) {
  if (state.variant == NodeVariant::kMemEfficient) {
    // s includes w_ii xhat_i, so s - xhat_i = sum_j w_ij (xhat_j - xhat_i) by
    // row stochasticity.
    state.x += gamma * (state.s - state.hat_self);
    return;
  }
  Vec pull = Vec::Zero(state.x.size());
  for (const auto& c : state.copies) pull += w_row[c.node] * (c.value - state.hat_self);
  state.x += gamma * pull;
}

}  // namespace squarm
