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
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "squarm/error.hpp"
#include "squarm/node.hpp"
#include "squarm/topology.hpp"

namespace squarm {
namespace {

NodeState make_node(int index, NodeVariant variant, const Vec& x0, std::vector<int> nbrs) {
  return NodeState::make(index, variant, x0, nbrs, make_stream(1, index, StreamPurpose::kGradient),
                         make_stream(1, index, StreamPurpose::kCompression));
}

TEST(Node, MakeZeroesEverythingButX) {
  Vec x0 = Vec::Constant(3, 2.0);
  auto full = make_node(1, NodeVariant::kFullCopy, x0, {2, 0});
  EXPECT_EQ(full.x, x0);
  EXPECT_TRUE(full.v.isZero());
  EXPECT_TRUE(full.hat_self.isZero());
  ASSERT_EQ(full.copies.size(), 2u);
  EXPECT_EQ(full.copies[0].node, 0);
  EXPECT_EQ(full.copies[1].node, 2);
  EXPECT_THROW(full.copy_of(5), Error);

  auto mem = make_node(1, NodeVariant::kMemEfficient, x0, {0, 2});
  EXPECT_TRUE(mem.copies.empty());
  EXPECT_TRUE(mem.s.isZero());
}

TEST(Node, LocalStepFromRestMovesByOnePlusBeta) {
  // v starts at 0: v = g, x -= eta (beta g + g).
  auto st = make_node(0, NodeVariant::kFullCopy, Vec::Zero(2), {});
  Vec g(2);
  g << 1.0, -2.0;
  local_step(st, g, 0.1, 0.9);
  EXPECT_NEAR(st.x[0], -0.19, 1e-15);
  EXPECT_NEAR(st.x[1], 0.38, 1e-15);
  EXPECT_EQ(st.v, g);
}

TEST(Node, LocalStepMatchesHandRolledRecurrence) {
  auto st = make_node(0, NodeVariant::kFullCopy, Vec::Constant(4, 1.0), {});
  Vec x = st.x, v = Vec::Zero(4);
  Rng rng(3);
  const double eta = 0.05, beta = 0.7;
  for (int t = 0; t < 20; ++t) {
    Vec g = testing::normal_vector(4, rng);
    v = beta * v + g;
    x = x - eta * (beta * v + g);
    local_step(st, g, eta, beta);
  }
  EXPECT_LT((st.x - x).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_LT((st.v - v).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(Node, LocalStepRejectsNonFiniteGradient) {
  auto st = make_node(0, NodeVariant::kFullCopy, Vec::Zero(2), {});
  Vec g(2);
  g << 1.0, std::numeric_limits<double>::quiet_NaN();
  try {
    local_step(st, g, 0.1, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
  EXPECT_TRUE(st.x.isZero());
}

TEST(Node, TriggerIsStrict) {
  auto st = make_node(0, NodeVariant::kFullCopy, Vec::Zero(1), {});
  st.x[0] = 2.0;  // drift^2 = 4
  EXPECT_TRUE(should_trigger(st, 3.0, 1.0));
  EXPECT_FALSE(should_trigger(st, 1.0, 2.0));  // 4 > 4 is false
  EXPECT_FALSE(should_trigger(st, 3.0, 2.0));
  EXPECT_TRUE(should_trigger(st, 0.0, 1.0));
  EXPECT_FALSE(should_trigger(st, std::numeric_limits<double>::infinity(), 1e-300));
  st.x[0] = 0.0;
  EXPECT_FALSE(should_trigger(st, 0.0, 1.0));
}

TEST(Node, EncodeLeavesStateAlone) {
  auto st = make_node(0, NodeVariant::kFullCopy, Vec::Constant(3, 1.5), {});
  CompressorSpec spec;
  auto msg = encode_update(st, spec, st.comp_rng);
  EXPECT_EQ(decode(msg), st.x);
  EXPECT_TRUE(st.hat_self.isZero());
}

TEST(Node, ApplyIncomingUpdatesTheRightCopy) {
  auto w = build_ring(4);
  auto st = make_node(0, NodeVariant::kFullCopy, Vec::Zero(2), w.neighbors(0));
  Vec q = Vec::Constant(2, 1.0);
  apply_incoming(st, 0, q, w.row(0));
  apply_incoming(st, 3, 2 * q, w.row(0));
  EXPECT_EQ(st.hat_self, q);
  EXPECT_EQ(st.copy_of(3), 2 * q);
  EXPECT_TRUE(st.copy_of(1).isZero());
  try {
    apply_incoming(st, 2, q, w.row(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidTopology);
  }

  auto mem = make_node(0, NodeVariant::kMemEfficient, Vec::Zero(2), w.neighbors(0));
  EXPECT_THROW(apply_incoming(mem, 2, q, w.row(0)), Error);
}

TEST(Node, ZeroGammaConsensusIsNoOp) {
  auto w = build_ring(4);
  auto st = make_node(0, NodeVariant::kFullCopy, Vec::Constant(2, 3.0), w.neighbors(0));
  apply_incoming(st, 1, Vec::Constant(2, 5.0), w.row(0));
  Vec before = st.x;
  consensus_step(st, 0.0, w.row(0));
  EXPECT_EQ(st.x, before);
}

TEST(Node, TwoNodeExample) {
  // W = [.5 .5; .5 .5], gamma = 1; node 1 publishes 2 e1, node 0 is at rest.
  auto w = build_complete(2);
  for (auto variant : {NodeVariant::kFullCopy, NodeVariant::kMemEfficient}) {
    auto st = make_node(0, variant, Vec::Zero(2), w.neighbors(0));
    Vec q = Vec::Zero(2);
    q[0] = 2.0;
    apply_incoming(st, 1, q, w.row(0));
    consensus_step(st, 1.0, w.row(0));
    EXPECT_NEAR(st.x[0], 1.0, 1e-15);
    EXPECT_NEAR(st.x[1], 0.0, 1e-15);
  }
}

TEST(Node, VariantsAgreeUnderRandomTraffic) {
  auto w = build_ring(5, 0.4);
  const int d = 3;
  Rng rng(11);
  std::vector<NodeState> full, mem;
  for (int i = 0; i < 5; ++i) {
    Vec x0 = testing::normal_vector(d, rng);
    full.push_back(make_node(i, NodeVariant::kFullCopy, x0, w.neighbors(i)));
    mem.push_back(make_node(i, NodeVariant::kMemEfficient, x0, w.neighbors(i)));
  }
  for (int round = 0; round < 10; ++round) {
    for (int i = 0; i < 5; ++i) {
      std::vector<int> senders{i};
      for (int j : w.neighbors(i)) senders.push_back(j);
      for (int j : senders) {
        Vec q = testing::normal_vector(d, rng);
        apply_incoming(full[i], j, q, w.row(i));
        apply_incoming(mem[i], j, q, w.row(i));
      }
      consensus_step(full[i], 0.3, w.row(i));
      consensus_step(mem[i], 0.3, w.row(i));
      EXPECT_LT((full[i].x - mem[i].x).lpNorm<Eigen::Infinity>(), 1e-12);
    }
  }
}

}  // namespace
}  // namespace squarm
