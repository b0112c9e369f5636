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

#ifndef GRIDAUTHZ_TOOLS_CLI_SCENARIO_H_
#define GRIDAUTHZ_TOOLS_CLI_SCENARIO_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gridauthz::cli {

// Scenario scripts drive one in-process simulator. One step per line,
// optionally prefixed with `label:`; a trailing `<<TAG` attaches the
// following lines up to a line reading `TAG` as the step body.
//
//   config gridmap <<EOF | dynamic-accounts A B.. | epoch N | max-active N
//          lease-ttl N | caps cpu=N memory=N disk=N
//   load-policy NAME <<EOF
//   load-cred NAME <<EOF
//   vo-key VO HEX
//   issue-cap NAME vo=POLICY cred=CRED [expiry=N]
//   submit cred=C resource=P [vo=P | cap=T] [runtime= memory= disk=] <<EOF
//   manage job=LABEL action=A cred=C resource=P [vo=P | cap=T] [priority=N]
//   tick N
//   check cred=C resource=P [vo=P | cap=T] [action=A jobtag=T owner=C now=N] [<<EOF]
//   expect LABEL decision|outcome|trace-contains|explain|state|consumed|reserved|priority ...
//   expect ledger <<EOF
//   expect events <<EOF
class ScriptError : public std::runtime_error {
 public:
  ScriptError(int step, int line, const std::string& reason);
  int step() const { return step_; }
  int line() const { return line_; }

 private:
  int step_;
  int line_;
};

struct ExpectResult {
  int step = 0;
  int line = 0;
  std::string text;    // the expectation as written
  bool passed = false;
  std::string detail;  // what was observed, on failure
};

struct ScenarioResult {
  std::vector<ExpectResult> expects;

  bool passed() const;
  // One PASS/FAIL line per expectation and a summary; empty when the
  // script has no expectations.
  std::string Report() const;
};

// Throws ScriptError for malformed scripts and references to unknown names.
ScenarioResult RunScenario(std::string_view script);

}  // namespace gridauthz::cli

#endif  // GRIDAUTHZ_TOOLS_CLI_SCENARIO_H_
