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

#include "squarm/presets.hpp"

namespace squarm {
namespace {

ThresholdSchedule piecewise_threshold() {
  ThresholdSchedule t;
  t.kind = ThresholdKind::kPiecewise;
  t.init = 2.5;
  t.step = 1.5;
  t.period = 1000;
  return t;
}

ThresholdSchedule fixed_threshold(ThresholdKind kind) {
  ThresholdSchedule t;
  t.kind = kind;
  return t;
}

GammaConfig strong_gamma(double omega) {
  GammaConfig g;
  g.kind = GammaSource::kAutoStrong;
  g.omega = omega;
  return g;
}

std::vector<Preset> make_presets() {
  std::vector<Preset> out;

  Preset squarm;
  squarm.name = "squarm";
  squarm.summary = "momentum, sparse sync, event trigger, sign+top-k";
  squarm.beta = 0.9;
  squarm.H = 5;
  squarm.threshold = piecewise_threshold();
  squarm.compressor = CompressorKind::kSignTopK;
  squarm.k_fraction = 0.01;
  squarm.gamma = strong_gamma(0.01);
  out.push_back(squarm);

  Preset sparq = squarm;
  sparq.name = "sparq";
  sparq.summary = "squarm without momentum";
  sparq.beta = 0.0;
  out.push_back(sparq);

  Preset choco;
  choco.name = "choco";
  choco.summary = "every-step compressed gossip with top-k";
  choco.beta = 0.0;
  choco.H = 1;
  choco.threshold = fixed_threshold(ThresholdKind::kAlways);
  choco.compressor = CompressorKind::kTopK;
  choco.k_fraction = 0.01;
  choco.gamma = strong_gamma(0.01);
  out.push_back(choco);

  Preset dpsgd;
  dpsgd.name = "dpsgd";
  dpsgd.summary = "uncompressed gossip every step";
  dpsgd.beta = 0.0;
  dpsgd.H = 1;
  dpsgd.threshold = fixed_threshold(ThresholdKind::kAlways);
  dpsgd.compressor = CompressorKind::kIdentity;
  dpsgd.gamma = GammaConfig{GammaSource::kExplicit, 1.0, std::nullopt};
  out.push_back(dpsgd);

  Preset local;
  local.name = "local_sgd";
  local.summary = "no communication";
  local.threshold = fixed_threshold(ThresholdKind::kNever);
  out.push_back(local);

  return out;
}

}  // namespace

void Preset::apply(RunConfig& config) const {
  if (beta) config.beta = *beta;
  if (H) config.H = *H;
  if (threshold) config.threshold = *threshold;
  if (compressor) {
    config.compressor.kind = *compressor;
    config.compressor.k.reset();
    config.compressor.k_fraction = k_fraction;
  }
  if (gamma) config.gamma = *gamma;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = make_presets();
  return all;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  throw Error(ErrorKind::kConfig, "preset: unknown name '" + std::string(name) + "'");
}

}  // namespace squarm
