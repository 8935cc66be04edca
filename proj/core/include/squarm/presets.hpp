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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "squarm/engine.hpp"

namespace squarm {

/// Partial configuration; set fields override a RunConfig when applied.
struct Preset {
  std::string name;
  std::string summary;
  std::optional<double> beta;
  std::optional<std::int64_t> H;
  std::optional<ThresholdSchedule> threshold;
  std::optional<CompressorKind> compressor;
  std::optional<double> k_fraction;
  std::optional<GammaConfig> gamma;

  void apply(RunConfig& config) const;
};

/// Names: squarm, sparq, choco, dpsgd, local_sgd.
const std::vector<Preset>& presets();

/// Throws Error(kConfig) for an unknown name.
const Preset& find_preset(std::string_view name);

}  // namespace squarm
