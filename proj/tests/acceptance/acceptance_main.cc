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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails or overruns its time budget.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cli/scenario.h"
#include "cli/support.h"
#include "gridauthz/jobmgr.h"
#include "testing/properties.h"
#include "testing/sim_driver.h"

namespace {

using namespace gridauthz;

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  const char* id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

Outcome RunScript(const std::string& file, std::size_t min_expects) {
  cli::ScenarioResult r;
  try {
    r = cli::RunScenario(cli::ReadFile(std::string(GRIDAUTHZ_SCENARIO_DIR) + "/" + file));
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
  std::size_t failed = 0;
  std::string first;
  for (const auto& e : r.expects) {
    if (!e.passed && failed++ == 0) first = "step " + std::to_string(e.step) + ": " + e.text;
  }
  if (r.expects.size() < min_expects) {
    return {false, "only " + std::to_string(r.expects.size()) + " expectations"};
  }
  std::string summary = std::to_string(r.expects.size() - failed) + "/" +
                        std::to_string(r.expects.size()) + " expectations";
  return {failed == 0, failed == 0 ? summary : summary + "; first failure " + first};
}

Outcome Property(const oracle::PropertyReport& r, int min_cases) {
  std::string summary = std::to_string(r.cases) + " cases, " + std::to_string(r.mismatches) +
                        " mismatches, " + std::to_string(r.permits) + " permits";
  bool ok = r.cases >= min_cases && r.mismatches == 0 && r.permits > 0;
  if (r.mismatches) summary += "; first: " + r.first_failure;
  return {ok, summary};
}

// Baseline mode: no VO policy, a resource policy that lets anyone submit.
// Every mapped user submits; every user then tries every management action
// on every job, and only the owner may succeed.
Outcome Baseline() {
  const std::int64_t far = 4102444800;
  const std::vector<GridCredential> users = {{"/O=Grid/CN=alice", std::nullopt, {}, far},
                                             {"/O=Grid/CN=bob", std::nullopt, {}, far},
                                             {"/O=Grid/CN=carol", std::nullopt, {}, far}};
  PullMode mode;
  mode.sources.resource =
      ParsePolicy("policy \"site\" source resource { subject any { allow action start; } }");
  EngineConfig config;
  for (const auto& u : users) {
    config.gridmap.Add(u.subject, u.subject.substr(u.subject.rfind('=') + 1));
  }
  JobManager engine(config);

  std::vector<std::string> jobs;
  for (const auto& u : users) {
    for (int i = 0; i < 2; ++i) {
      try {
        jobs.push_back(
            engine.Submit(u, "&(executable=\"/bin/date\")(count=1)", mode, {1000, 1, 1}).id);
      } catch (const JobManagerError& e) {
        return {false, u.subject + " could not submit: " + e.what()};
      }
    }
  }
  GridCredential stranger{"/O=Grid/CN=mallory", std::nullopt, {}, far};
  try {
    engine.Submit(stranger, "&(executable=\"/bin/date\")", mode, {1, 1, 1});
    return {false, "unmapped user admitted without a dynamic pool"};
  } catch (const JobManagerError& e) {
    if (e.kind() != JobManagerError::Kind::kNoAccounts) {
      return {false, "unmapped: " + std::string(e.what())};
    }
  }
  engine.Tick(1);

  int owner_ok = 0;
  int others_denied = 0;
  const JobAction actions[] = {JobAction::kStatus, JobAction::kSetPriority, JobAction::kSuspend,
                               JobAction::kResume, JobAction::kCancel};
  for (JobAction action : actions) {
    for (const auto& id : jobs) {
      const std::string owner = engine.Record({id}).owner;
      for (const auto& u : users) {
        if (u.subject == owner) continue;
        try {
          engine.Manage({id}, action, u, mode, 1);
          return {false, u.subject + " managed " + id};
        } catch (const JobManagerError& e) {
          if (e.kind() != JobManagerError::Kind::kDenied) return {false, e.what()};
          ++others_denied;
        }
      }
      for (const auto& u : users) {
        if (u.subject != owner) continue;
        try {
          engine.Manage({id}, action, u, mode, 1);
          ++owner_ok;
        } catch (const JobManagerError& e) {
          return {false, "owner refused " + std::string(ToString(action)) + ": " + e.what()};
        }
      }
    }
  }
  for (const auto& id : jobs) {
    if (engine.Record({id}).state != JobState::kCanceled) return {false, id + " not canceled"};
  }
  return {true, std::to_string(owner_ok) + " owner actions permitted, " +
                    std::to_string(others_denied) + " foreign actions denied"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"A1", "combining policies from different sources", 1.0,
       [] { return RunScript("scenario1.scn", 10); }},
      {"A2", "fine-grain control of resource use", 1.0,
       [] { return RunScript("scenario2.scn", 16); }},
      {"A3", "VO-wide job management", 1.0, [] { return RunScript("scenario3.scn", 16); }},
      {"A4", "push equals pull", 10.0,
       [] { return Property(oracle::CheckPushPull(4040, 1000), 1000); }},
      {"A5", "oracle equivalence", 10.0,
       [] { return Property(oracle::CheckOracle(5050, 1000), 1000); }},
      {"A6", "state machine safety and ledger conservation", 30.0,
       [] {
         simcheck::SimReport r = simcheck::RunRandomSequences(6060, 10000, 40);
         std::string summary = std::to_string(r.sequences) + " sequences, " +
                               std::to_string(r.operations) + " operations, " +
                               std::to_string(r.violations()) + " violations";
         if (r.violations()) summary += "; first: " + r.first_failure;
         return Outcome{r.sequences >= 10000 && r.violations() == 0, summary};
       }},
      {"A7", "baseline owner-only management", 1.0, Baseline},
  };

  bool all = true;
  for (const Criterion& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o = c.run();
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = secs < c.budget_seconds;
    bool pass = o.ok && in_time;
    all = all && pass;
    std::printf("%s %s: %s (%s; %.3fs of %.0fs)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_seconds);
  }
  return all ? 0 : 1;
}
