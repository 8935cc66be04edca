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

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "squarm/engine.hpp"

namespace squarm::cli {

using Json = nlohmann::json;

/// Flattened dotted-key view of a config document. Nested objects are
/// flattened; arrays are kept as leaf values.
using FlatConfig = std::map<std::string, Json>;

FlatConfig flatten(const Json& doc);
FlatConfig read_config_file(const std::string& path);

/// Parses trailing `--key=value` / `--key value` tokens. Values that parse as
/// JSON are kept typed, anything else becomes a string. Short aliases such as
/// `n`, `objective` and `compressor` are expanded.
FlatConfig parse_overrides(const std::vector<std::string>& tokens);

/// Applies one key. Unknown keys and bad values throw Error(kConfig) naming the key.
void apply_key(RunConfig& config, const std::string& key, const Json& value);

/// defaults <- SQUARM_SEED <- preset <- file <- overrides.
RunConfig assemble_config(const FlatConfig& file, const FlatConfig& overrides);

Json to_json(const RunConfig& config);
std::vector<std::string> known_keys();

std::string_view to_string(TopologyKind kind);
std::string_view to_string(LrSource kind);
std::string_view to_string(GammaSource kind);
std::string_view to_string(InitKind kind);
std::string_view to_string(Accounting kind);
std::string_view to_string(NodeVariant kind);
std::string_view to_string(PartitionMode kind);

}  // namespace squarm::cli
