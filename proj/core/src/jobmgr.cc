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

#include "gridauthz/jobmgr.h"

#include <algorithm>
#include <cstdio>

namespace gridauthz {

namespace {

constexpr std::string_view kStateNames[] = {"pending", "active",  "suspended",
                                            "done",    "failed",  "canceled"};

std::string JobId(std::uint64_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "job-%04llu", static_cast<unsigned long long>(seq));
  return buf;
}

std::vector<Job*> BySubmission(std::map<std::string, Job>& jobs) {
  std::vector<Job*> out;
  out.reserve(jobs.size());
  for (auto& [id, job] : jobs) out.push_back(&job);
  std::sort(out.begin(), out.end(), [](const Job* a, const Job* b) { return a->seq < b->seq; });
  return out;
}

std::int64_t CeilDiv(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

std::string_view ToString(JobState state) {
  return kStateNames[static_cast<std::size_t>(state)];
}

std::optional<JobState> ParseJobState(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kStateNames); ++i) {
    if (kStateNames[i] == text) return static_cast<JobState>(i);
  }
  return std::nullopt;
}

std::optional<JobState> NextState(JobState from, JobEvent event) {
  switch (event) {
    case JobEvent::kSchedule:
      if (from == JobState::kPending) return JobState::kActive;
      break;
    case JobEvent::kSuspend:
      if (from == JobState::kActive) return JobState::kSuspended;
      break;
    case JobEvent::kResume:
      if (from == JobState::kSuspended) return JobState::kActive;
      break;
    case JobEvent::kCancel:
      if (!IsTerminal(from)) return JobState::kCanceled;
      break;
    case JobEvent::kComplete:
      if (from == JobState::kActive) return JobState::kDone;
      break;
    case JobEvent::kFail:
      if (from == JobState::kActive) return JobState::kFailed;
      break;
  }
  return std::nullopt;
}

std::string_view ToString(JobManagerError::Kind kind) {
  switch (kind) {
    case JobManagerError::Kind::kParse: return "parse-error";
    case JobManagerError::Kind::kDenied: return "denied";
    case JobManagerError::Kind::kQuotaExceeded: return "quota-exceeded";
    case JobManagerError::Kind::kNoAccounts: return "no-accounts";
    case JobManagerError::Kind::kIllegalTransition: return "illegal-transition";
    case JobManagerError::Kind::kUnknownJob: return "unknown-job";
    case JobManagerError::Kind::kBadArgument: return "bad-argument";
  }
  return "?";
}

std::string Event::Format() const {
  return "t=" + std::to_string(time) + " job=" + job + " event=" + name + " detail=" + detail;
}

JobManager::JobManager(EngineConfig config) : config_(std::move(config)) {
  pool_ = DynamicAccountPool(config_.dynamic_accounts);
}

JobManager::JobManager(EngineConfig config, EngineSnapshot snapshot)
    : config_(std::move(config)),
      clock_(snapshot.clock),
      next_seq_(snapshot.next_seq),
      ledger_(std::move(snapshot.ledger)),
      pool_(std::move(snapshot.pool)),
      events_(std::move(snapshot.events)) {
  for (auto& job : snapshot.jobs) {
    std::string id = job.id;
    jobs_.emplace(std::move(id), std::move(job));
  }
  for (const auto& account : config_.dynamic_accounts) pool_.AddAccount(account);
}

std::optional<Decision> JobManager::CheckExpiry(const GridCredential& cred) const {
  if (cred.expiry > config_.epoch + clock_) return std::nullopt;
  Decision d;
  d.trace.push_back({"credential", std::nullopt, Effect::kDeny, "credential expired"});
  return d;
}

Decision JobManager::Authorize(const AuthzQuery& query, const AuthzMode& mode) const {
  if (const auto* pull = std::get_if<PullMode>(&mode)) return Decide(query, pull->sources);
  const auto& push = std::get<PushMode>(mode);
  return DecidePush(query, push.resource, push.token, config_.registry,
                    config_.epoch + clock_);
}

JobHandle JobManager::Submit(const GridCredential& cred, std::string_view rsl_text,
                             const AuthzMode& mode, const SimProfile& profile) {
  std::lock_guard lock(mu_);
  if (profile.runtime < 0 || profile.memory_peak < 0 || profile.disk < 0) {
    throw JobManagerError(JobManagerError::Kind::kBadArgument, "negative job profile");
  }
  RslRequest request;
  try {
    request = ParseRsl(rsl_text);
  } catch (const RslError& e) {
    throw JobManagerError(JobManagerError::Kind::kParse, e.what());
  }
  if (auto expired = CheckExpiry(cred)) {
    throw JobManagerError(JobManagerError::Kind::kDenied, "credential expired", *expired);
  }

  AuthzQuery query;
  query.credential = cred;
  query.action = JobAction::kStart;
  query.target = config_.target;
  query.request = request;
  Decision decision = Authorize(query, mode);
  if (!decision.permitted()) {
    throw JobManagerError(JobManagerError::Kind::kDenied, "denied by policy", decision);
  }

  // The VO document that governs accounting for this submission.
  std::optional<PolicyDocument> vo_doc;
  if (cred.vo) {
    if (const auto* pull = std::get_if<PullMode>(&mode)) {
      vo_doc = pull->sources.vo;
    } else {
      // DecidePush has already verified the token.
      vo_doc = ParsePolicy(std::get<PushMode>(mode).token.claims.policy_fragment);
    }
  }

  AllocationLedger ledger = ledger_;
  DynamicAccountPool pool = pool_;

  Job job;
  job.seq = next_seq_;
  job.id = JobId(job.seq);
  job.owner = cred.subject;
  job.vo = cred.vo;
  if (const auto* tag = request.Find("jobtag")) job.jobtag = std::get<std::string>(*tag);
  if (const auto* count = request.Find("count")) job.count = std::get<std::int64_t>(*count);
  job.sandbox = DeriveSandboxSpec(request, config_.caps);
  job.reserved = decision.charged_estimate.value_or(job.sandbox.max_cpu);
  job.submitted_at = clock_;
  job.profile = profile;
  job.request = request;

  if (vo_doc && vo_doc->allocation) {
    const std::string& vo = *cred.vo;
    auto quota = vo_doc->member_quotas.find(cred.subject);
    try {
      ledger.ConfigureVo(vo, *vo_doc->allocation);
      ledger.ConfigureMember(vo, cred.subject,
                             quota != vo_doc->member_quotas.end() ? quota->second
                                                                  : *vo_doc->allocation);
    } catch (const EnforceError& e) {
      throw JobManagerError(JobManagerError::Kind::kQuotaExceeded, e.what(), decision,
                            QuotaScope::kVo);
    }
    ReserveOutcome outcome = ledger.Reserve(vo, cred.subject, job.reserved);
    if (!outcome.ok()) {
      throw JobManagerError(JobManagerError::Kind::kQuotaExceeded,
                            "quota exceeded (" + std::string(ToString(*outcome.exceeded)) + ")",
                            decision, outcome.exceeded);
    }
    job.charged = true;
  }

  if (auto mapped = config_.gridmap.Map(cred.subject)) {
    job.account = *mapped;
  } else {
    try {
      LocalAccountLease lease = pool.Lease(cred.subject, job.sandbox, config_.lease_ttl, clock_);
      job.account = LocalAccountRef{lease.account};
      job.dynamic_account = true;
    } catch (const EnforceError& e) {
      throw JobManagerError(JobManagerError::Kind::kNoAccounts, e.what(), decision);
    }
  }

  ledger_ = std::move(ledger);
  pool_ = std::move(pool);
  ++next_seq_;
  Log({clock_, job.id, "submitted",
       "owner=" + job.owner + " account=" + job.account.name +
           " reserved=" + std::to_string(job.reserved)});
  JobHandle handle{job.id};
  jobs_.emplace(job.id, std::move(job));
  return handle;
}

ManagementResult JobManager::Manage(const JobHandle& handle, JobAction action,
                                    const GridCredential& cred, const AuthzMode& mode,
                                    std::optional<std::int64_t> priority) {
  std::lock_guard lock(mu_);
  if (action == JobAction::kStart) {
    throw JobManagerError(JobManagerError::Kind::kBadArgument,
                          "start is not a management action");
  }
  Job& job = FindJob(handle.id);
  const std::string action_name(ToString(action));

  Decision decision;
  if (auto expired = CheckExpiry(cred)) {
    decision = *expired;
  } else {
    AuthzQuery query;
    query.credential = cred;
    query.action = action;
    query.target = config_.target;
    query.jobtag = job.jobtag;
    query.job_owner = job.owner;
    decision = Authorize(query, mode);
  }
  if (!decision.permitted()) {
    Log({clock_, job.id, "denied", "action=" + action_name + " by=" + cred.subject});
    throw JobManagerError(JobManagerError::Kind::kDenied, "denied by policy", decision);
  }

  auto illegal = [&] {
    throw JobManagerError(JobManagerError::Kind::kIllegalTransition,
                          "cannot " + action_name + " a " + std::string(ToString(job.state)) +
                              " job");
  };
  switch (action) {
    case JobAction::kStatus: break;
    case JobAction::kSetPriority:
      if (!priority) {
        throw JobManagerError(JobManagerError::Kind::kBadArgument,
                              "set_priority requires a priority value");
      }
      if (IsTerminal(job.state)) illegal();
      job.priority = *priority;
      Log({clock_, job.id, "priority",
           "priority=" + std::to_string(*priority) + " by=" + cred.subject});
      break;
    case JobAction::kSuspend:
    case JobAction::kResume: {
      JobEvent ev = action == JobAction::kSuspend ? JobEvent::kSuspend : JobEvent::kResume;
      auto next = NextState(job.state, ev);
      if (!next) illegal();
      job.state = *next;
      Log({clock_, job.id, action == JobAction::kSuspend ? "suspended" : "resumed",
           "by=" + cred.subject});
      break;
    }
    case JobAction::kCancel: {
      if (!NextState(job.state, JobEvent::kCancel)) illegal();
      std::vector<Event> ignored;
      Finish(job, JobEvent::kCancel, clock_, "by=" + cred.subject, ignored);
      break;
    }
    case JobAction::kStart: break;
  }
  return {job, decision};
}

void JobManager::Finish(Job& job, JobEvent event, std::int64_t when, std::string detail,
                        std::vector<Event>& out) {
  auto next = NextState(job.state, event);
  if (!next || !IsTerminal(*next)) throw std::logic_error("invalid terminal transition");
  job.state = *next;
  job.ended_at = when;
  if (job.charged) ledger_.Settle(*job.vo, job.owner, job.reserved, job.consumed);
  if (job.dynamic_account) pool_.Release(job.account.name);
  Log({when, job.id, std::string(ToString(job.state)), std::move(detail)}, &out);
}

std::vector<Event> JobManager::Tick(std::int64_t dt) {
  std::lock_guard lock(mu_);
  if (dt <= 0) {
    throw JobManagerError(JobManagerError::Kind::kBadArgument, "tick requires dt > 0");
  }
  const std::int64_t t0 = clock_;
  const std::int64_t t1 = clock_ + dt;
  std::vector<Event> tick_events;
  std::vector<Job*> jobs = BySubmission(jobs_);

  for (Job* job : jobs) {
    if (job->state != JobState::kActive || !job->dynamic_account) continue;
    const LocalAccountLease* lease = pool_.FindLease(job->account.name);
    if (lease != nullptr && lease->expiry >= t1) continue;
    // Lease lapsed under a running job: a simulator fault.
    Finish(*job, JobEvent::kFail, t0, "lease-expired consumed=" + std::to_string(job->consumed),
           tick_events);
  }

  std::vector<Job*> pending;
  std::size_t active = 0;
  for (Job* job : jobs) {
    if (job->state == JobState::kPending) pending.push_back(job);
    if (job->state == JobState::kActive) ++active;
  }
  std::stable_sort(pending.begin(), pending.end(), [](const Job* a, const Job* b) {
    return a->priority > b->priority ||
           (a->priority == b->priority && a->submitted_at < b->submitted_at);
  });
  for (Job* job : pending) {
    if (config_.max_active != 0 && active >= config_.max_active) break;
    job->state = *NextState(job->state, JobEvent::kSchedule);
    ++active;
    Log({t0, job->id, "activated", "priority=" + std::to_string(job->priority)}, &tick_events);
  }

  for (Job* job : jobs) {
    if (job->state != JobState::kActive) continue;
    const std::int64_t remaining = std::max<std::int64_t>(0, job->profile.runtime - job->consumed);
    std::int64_t capacity = 0;
    if (__builtin_mul_overflow(job->count, dt, &capacity)) capacity = INT64_MAX;
    const std::int64_t use = std::min(capacity, remaining);
    const std::int64_t before = job->consumed;
    UsageSample sample{before + use, job->profile.memory_peak, job->profile.disk};
    if (auto breach = RecordUsage(job->sandbox, sample)) {
      job->consumed = std::min(sample.cpu, job->sandbox.max_cpu);
      std::int64_t when = t0 + std::min(dt, CeilDiv(job->consumed - before, job->count));
      Finish(*job, JobEvent::kFail, when,
             "limit=" + std::string(ToString(*breach)) +
                 " consumed=" + std::to_string(job->consumed),
             tick_events);
    } else if (sample.cpu >= job->profile.runtime) {
      job->consumed = sample.cpu;
      Finish(*job, JobEvent::kComplete, t0 + CeilDiv(use, job->count),
             "consumed=" + std::to_string(job->consumed), tick_events);
    } else {
      job->consumed = sample.cpu;
    }
  }

  for (Job* job : jobs) {
    if (!IsTerminal(job->state) && job->dynamic_account) {
      pool_.Renew(job->account.name, t1 + config_.lease_ttl);
    }
  }
  clock_ = t1;
  std::stable_sort(tick_events.begin(), tick_events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  // Keep the persistent log in the same order as the returned events.
  events_.resize(events_.size() - tick_events.size());
  events_.insert(events_.end(), tick_events.begin(), tick_events.end());
  return tick_events;
}

void JobManager::Log(Event event, std::vector<Event>* out) {
  if (out != nullptr) out->push_back(event);
  events_.push_back(std::move(event));
}

Job& JobManager::FindJob(const std::string& id) {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) {
    throw JobManagerError(JobManagerError::Kind::kUnknownJob, "unknown job '" + id + "'");
  }
  return it->second;
}

Job JobManager::Record(const JobHandle& handle) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(handle.id);
  if (it == jobs_.end()) {
    throw JobManagerError(JobManagerError::Kind::kUnknownJob,
                          "unknown job '" + handle.id + "'");
  }
  return it->second;
}

std::vector<Job> JobManager::Jobs() const {
  std::lock_guard lock(mu_);
  std::vector<Job> out;
  for (const auto& [id, job] : jobs_) out.push_back(job);
  std::sort(out.begin(), out.end(), [](const Job& a, const Job& b) { return a.seq < b.seq; });
  return out;
}

AllocationLedger JobManager::Ledger() const {
  std::lock_guard lock(mu_);
  return ledger_;
}

DynamicAccountPool JobManager::Pool() const {
  std::lock_guard lock(mu_);
  return pool_;
}

std::vector<Event> JobManager::Events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::string JobManager::FormatEventLog() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : events_) out += e.Format() + "\n";
  return out;
}

std::int64_t JobManager::Now() const {
  std::lock_guard lock(mu_);
  return clock_;
}

EngineSnapshot JobManager::Export() const {
  std::lock_guard lock(mu_);
  EngineSnapshot snap;
  snap.clock = clock_;
  snap.next_seq = next_seq_;
  for (const auto& [id, job] : jobs_) snap.jobs.push_back(job);
  std::sort(snap.jobs.begin(), snap.jobs.end(),
            [](const Job& a, const Job& b) { return a.seq < b.seq; });
  snap.ledger = ledger_;
  snap.pool = pool_;
  snap.events = events_;
  return snap;
}

}  // namespace gridauthz
