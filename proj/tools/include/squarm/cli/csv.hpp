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

#include <iosfwd>
#include <string>
#include <vector>

#include "squarm/engine.hpp"

namespace squarm::cli {

inline constexpr const char* kMetricsHeader =
    "t,loss,grad_norm_sq,consensus,bits_cum,messages,triggers,virtual_residual,"
    "weighted_avg_loss";

/// Doubles use 17 significant digits so a read-back is exact.
std::string format_row(const MetricsRow& row);
void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_metrics_file(const std::string& path, const std::vector<MetricsRow>& rows);

/// Throws Error(kData) on a bad header or malformed line.
std::vector<MetricsRow> read_metrics_file(const std::string& path);

}  // namespace squarm::cli
