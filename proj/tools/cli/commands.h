// Copyright 2026 The gridauthz Authors.
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

#ifndef GRIDAUTHZ_TOOLS_CLI_COMMANDS_H_
#define GRIDAUTHZ_TOOLS_CLI_COMMANDS_H_

#include <ostream>

namespace gridauthz::cli {

// Entry point of the `gridauthz` binary. Returns the process exit code:
// 0 ok or permit, 1 refused, 2 input error, 3 state-file error.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridauthz::cli

#endif  // GRIDAUTHZ_TOOLS_CLI_COMMANDS_H_
