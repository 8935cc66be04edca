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
#include <random>

#include <Eigen/Dense>

namespace squarm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Every node owns private streams; results never depend on scheduling.
using Rng = std::mt19937_64;

enum class StreamPurpose : std::uint32_t {
  kGradient = 0,
  kCompression = 1,
  kInit = 2,
  kData = 3,
};

/// Deterministic stream derived from (seed, owner, purpose).
Rng make_stream(std::uint64_t seed, std::uint64_t owner, StreamPurpose purpose);

}  // namespace squarm
