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

#ifndef GRIDAUTHZ_JOBMGR_H_
#define GRIDAUTHZ_JOBMGR_H_

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridauthz/credential.h"
#include "gridauthz/enforce.h"
#include "gridauthz/pdp.h"
#include "gridauthz/policy.h"
#include "gridauthz/rsl.h"

namespace gridauthz {

enum class JobState { kPending, kActive, kSuspended, kDone, kFailed, kCanceled };
std::string_view ToString(JobState state);
std::optional<JobState> ParseJobState(std::string_view text);
inline bool IsTerminal(JobState s) {
  return s == JobState::kDone || s == JobState::kFailed || s == JobState::kCanceled;
}

enum class JobEvent { kSchedule, kSuspend, kResume, kCancel, kComplete, kFail };

// The fixed transition table:
//   pending -schedule-> active, active -suspend-> suspended,
//   suspended -resume-> active, {pending,active,suspended} -cancel-> canceled,
//   active -complete-> done, active -fail-> failed.
// Returns nullopt for any other (state, event) pair.
std::optional<JobState> NextState(JobState from, JobEvent event);

struct SimProfile {
  std::int64_t runtime = 0;      // total cpu-seconds the job needs to finish
  std::int64_t memory_peak = 0;  // MB
  std::int64_t disk = 0;         // MB

  bool operator==(const SimProfile&) const = default;
};

struct JobHandle {
  std::string id;
};

struct Job {
  std::string id;
  std::uint64_t seq = 0;  // submission order
  std::string owner;
  std::optional<std::string> vo;
  std::optional<std::string> jobtag;
  RslRequest request;
  JobState state = JobState::kPending;
  LocalAccountRef account;
  bool dynamic_account = false;
  bool charged = false;  // holds a ledger reservation against `vo`
  std::int64_t count = 1;
  std::int64_t reserved = 0;
  std::int64_t consumed = 0;
  std::int64_t priority = 0;
  std::int64_t submitted_at = 0;
  std::optional<std::int64_t> ended_at;
  SimProfile profile;
  SandboxSpec sandbox;
};

struct PullMode {
  PolicySourceSet sources;
};
struct PushMode {
  PolicyDocument resource;
  CapabilityToken token;
};
using AuthzMode = std::variant<PullMode, PushMode>;

// Event log line: `t=<sim-sec> job=<id> event=<name> detail=<text>`.
struct Event {
  std::int64_t time = 0;
  std::string job;
  std::string name;
  std::string detail;

  std::string Format() const;
  bool operator==(const Event&) const = default;
};

class JobManagerError : public std::runtime_error {
 public:
  enum class Kind {
    kParse,
    kDenied,
    kQuotaExceeded,
    kNoAccounts,
    kIllegalTransition,
    kUnknownJob,
    kBadArgument
  };

  JobManagerError(Kind kind, std::string message, std::optional<Decision> decision = {},
                  std::optional<QuotaScope> scope = {})
      : std::runtime_error(std::move(message)),
        kind_(kind),
        decision_(std::move(decision)),
        scope_(scope) {}

  Kind kind() const { return kind_; }
  const std::optional<Decision>& decision() const { return decision_; }
  std::optional<QuotaScope> scope() const { return scope_; }

 private:
  Kind kind_;
  std::optional<Decision> decision_;
  std::optional<QuotaScope> scope_;
};

std::string_view ToString(JobManagerError::Kind kind);

struct EngineConfig {
  GridMapFile gridmap;
  std::vector<std::string> dynamic_accounts;
  SandboxCaps caps;
  std::int64_t lease_ttl = 86400;  // sim-seconds
  std::size_t max_active = 0;      // 0: unlimited
  KeyRegistry registry;
  std::int64_t epoch = 0;  // unix time at sim t=0, for credential and token expiry
  std::string target = "gatekeeper";
};

struct ManagementResult {
  Job job;
  Decision decision;
};

// Persisted simulator state.
struct EngineSnapshot {
  std::int64_t clock = 0;
  std::uint64_t next_seq = 1;
  std::vector<Job> jobs;
  AllocationLedger ledger;
  DynamicAccountPool pool;
  std::vector<Event> events;
};

// Gatekeeper plus job manager instances. Every mutation is serialized on
// one lock; accessors return copies.
//
// Simulated time: an active job consumes `count` cpu-seconds per
// sim-second and finishes once it has consumed profile.runtime. Pending
// jobs are activated at tick boundaries, highest priority first, then in
// submission order.
class JobManager {
 public:
  explicit JobManager(EngineConfig config);
  JobManager(EngineConfig config, EngineSnapshot snapshot);

  // Gatekeeper PEP. Admission is atomic: on any error nothing changes.
  JobHandle Submit(const GridCredential& cred, std::string_view rsl_text,
                   const AuthzMode& mode, const SimProfile& profile);

  // Job manager PEP for cancel, status, suspend, resume and set_priority.
  ManagementResult Manage(const JobHandle& handle, JobAction action,
                          const GridCredential& cred, const AuthzMode& mode,
                          std::optional<std::int64_t> priority = std::nullopt);

  std::vector<Event> Tick(std::int64_t dt);

  Job Record(const JobHandle& handle) const;
  std::vector<Job> Jobs() const;
  AllocationLedger Ledger() const;
  DynamicAccountPool Pool() const;
  std::vector<Event> Events() const;
  std::string FormatEventLog() const;
  std::int64_t Now() const;

  EngineSnapshot Export() const;
  const EngineConfig& config() const { return config_; }

 private:
  Decision Authorize(const AuthzQuery& query, const AuthzMode& mode) const;
  std::optional<Decision> CheckExpiry(const GridCredential& cred) const;
  Job& FindJob(const std::string& id);
  void Finish(Job& job, JobEvent event, std::int64_t when, std::string detail,
              std::vector<Event>& out);
  void Log(Event event, std::vector<Event>* out = nullptr);

  mutable std::mutex mu_;
  EngineConfig config_;
  std::int64_t clock_ = 0;
  std::uint64_t next_seq_ = 1;
  std::map<std::string, Job> jobs_;
  AllocationLedger ledger_;
  DynamicAccountPool pool_;
  std::vector<Event> events_;
};

}  // namespace gridauthz

#endif  // GRIDAUTHZ_JOBMGR_H_
