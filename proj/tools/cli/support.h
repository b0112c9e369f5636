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

#ifndef GRIDAUTHZ_TOOLS_CLI_SUPPORT_H_
#define GRIDAUTHZ_TOOLS_CLI_SUPPORT_H_

#include <stdexcept>
#include <string>
#include <string_view>

#include "gridauthz/jobmgr.h"

namespace gridauthz::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitRefused = 1,  // denied, illegal transition, quota, no accounts
  kExitInput = 2,
  kExitState = 3,
};

// Raised for unreadable files and malformed flag values.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const std::string& path);

// Exit code for an engine error: parse, bad-argument and unknown-job are
// input errors, everything else is a refusal.
int ExitCodeFor(const JobManagerError& e);

// "ok", a kind name such as "denied", or "quota-exceeded(member)".
std::string OutcomeName(const JobManagerError& e);

// Human-readable message for the standard parse errors.
std::string DescribeInputError(const std::exception& e);

}  // namespace gridauthz::cli

#endif  // GRIDAUTHZ_TOOLS_CLI_SUPPORT_H_
