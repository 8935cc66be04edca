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

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace squarm::cli {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

const std::vector<std::string>& verify_suites();

/// suite is one of verify_suites() or "all". Throws Error(kConfig) otherwise.
std::vector<CheckResult> run_verify(std::string_view suite);

}  // namespace squarm::cli
