// Copyright 2026 The iotmesh Authors
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
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace iotmesh {

/// Process exit codes of the `iotmesh` command. They are part of its
/// interface and never change meaning.
enum ExitCode : int {
  kExitOk = 0,
  /// The instance answered with an error, could not be reached, or a
  /// scenario assertion failed.
  kExitRequestFailed = 1,
  /// Bad flags, unreadable or malformed input files, invalid config.
  kExitUsage = 2,
  /// `serve` could not bind one of its endpoints.
  kExitBindFailed = 3,
};

/// Runs one invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iotmesh
