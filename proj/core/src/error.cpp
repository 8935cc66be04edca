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

#include "squarm/error.hpp"

namespace squarm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidTopology: return "invalid-topology";
    case ErrorKind::kConnectivity: return "connectivity";
    case ErrorKind::kStochasticity: return "stochasticity";
    case ErrorKind::kSymmetry: return "symmetry";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kData: return "data";
    case ErrorKind::kNoOptimum: return "no-optimum";
    case ErrorKind::kPartition: return "partition";
    case ErrorKind::kTheoremConsistency: return "theorem-consistency";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kDivergence: return "divergence";
  }
  return "unknown";
}

}  // namespace squarm
