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

namespace squarm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

struct RunRequest {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
};

struct SweepRequest {
  RunRequest base;
  std::string axis;
  std::vector<std::string> values;
};

int cmd_run(const RunRequest& request, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& suite, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepRequest& request, std::ostream& out, std::ostream& err);
int cmd_presets(std::ostream& out);

/// Full command-line entry; returns the process exit status.
int main_entry(int argc, char** argv);

}  // namespace squarm::cli
