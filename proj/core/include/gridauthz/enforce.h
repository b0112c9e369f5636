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

#ifndef GRIDAUTHZ_ENFORCE_H_
#define GRIDAUTHZ_ENFORCE_H_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gridauthz/rsl.h"

namespace gridauthz {

// Limits are inclusive: usage equal to a limit is allowed.
struct SandboxSpec {
  std::int64_t max_memory = 0;  // MB
  std::int64_t max_disk = 0;    // MB
  std::int64_t max_cpu = 0;     // cpu-seconds
  std::set<std::string> groups;

  bool operator==(const SandboxSpec&) const = default;
};

// Resource-side ceilings for sandbox limits.
struct SandboxCaps {
  std::int64_t max_memory = 4096;
  std::int64_t max_disk = 10240;
  std::int64_t max_cpu = 86400;
  std::set<std::string> groups;

  bool operator==(const SandboxCaps&) const = default;
};

// Each limit is the smaller of the request's bound (maxmemory, and
// count x maxcputime) and the resource cap.
SandboxSpec DeriveSandboxSpec(const RslRequest& request, const SandboxCaps& caps);

struct UsageSample {
  std::int64_t cpu = 0;     // cumulative cpu-seconds
  std::int64_t memory = 0;  // MB
  std::int64_t disk = 0;    // MB
};

enum class LimitDimension { kCpu, kMemory, kDisk };
std::string_view ToString(LimitDimension dim);

// nullopt when within limits; otherwise the first breached dimension in
// the order cpu, memory, disk.
std::optional<LimitDimension> RecordUsage(const SandboxSpec& spec, const UsageSample& cum);

class EnforceError : public std::runtime_error {
 public:
  enum class Kind {
    kPoolExhausted,
    kUnknownLease,
    kUnknownVo,
    kUnknownMember,
    kUnderflow,
    kInvalidAmount
  };
  EnforceError(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct LocalAccountLease {
  std::string account;
  std::string subject;
  SandboxSpec spec;
  std::int64_t expiry = 0;  // sim-seconds

  bool operator==(const LocalAccountLease&) const = default;
};

// Dynamic accounts. Leases are handed out first-in first-out; a released
// account goes to the back of the free queue.
class DynamicAccountPool {
 public:
  DynamicAccountPool() = default;
  explicit DynamicAccountPool(const std::vector<std::string>& accounts);

  LocalAccountLease Lease(const std::string& subject, const SandboxSpec& spec,
                          std::int64_t ttl, std::int64_t now);
  void Release(const std::string& account);
  void Renew(const std::string& account, std::int64_t expiry);

  // Adds an account to the free queue unless it is already known.
  void AddAccount(const std::string& account);

  bool HasFree() const { return !free_.empty(); }
  std::size_t size() const { return free_.size() + leased_.size(); }
  const std::deque<std::string>& free_accounts() const { return free_; }
  const std::map<std::string, LocalAccountLease>& leases() const { return leased_; }
  const LocalAccountLease* FindLease(const std::string& account) const;

  // Rebuilds a pool from persisted state.
  static DynamicAccountPool Restore(std::deque<std::string> free,
                                    std::map<std::string, LocalAccountLease> leased);

 private:
  std::deque<std::string> free_;
  std::map<std::string, LocalAccountLease> leased_;
};

enum class QuotaScope { kVo, kMember };
std::string_view ToString(QuotaScope scope);

struct ReserveOutcome {
  std::optional<QuotaScope> exceeded;  // nullopt: reserved
  bool ok() const { return !exceeded; }
};

// VO allocation and per-member quota accounting, in cpu-seconds.
class AllocationLedger {
 public:
  struct Account {
    std::int64_t limit = 0;
    std::int64_t used = 0;
    bool operator==(const Account&) const = default;
  };
  struct VoAccounts {
    Account vo;
    std::map<std::string, Account> members;
    bool operator==(const VoAccounts&) const = default;
  };

  // Registers or updates limits. Throws kInvalidAmount if a new limit would
  // fall below what is already used.
  void ConfigureVo(const std::string& vo, std::int64_t allocation);
  void ConfigureMember(const std::string& vo, const std::string& member, std::int64_t quota);

  bool HasVo(std::string_view vo) const { return vos_.count(std::string(vo)) != 0; }
  bool HasMember(std::string_view vo, std::string_view member) const;

  // All-or-nothing.
  ReserveOutcome Reserve(const std::string& vo, const std::string& member, std::int64_t amount);
  // Refunds reserved - consumed.
  void Settle(const std::string& vo, const std::string& member, std::int64_t reserved,
              std::int64_t consumed);

  const std::map<std::string, VoAccounts>& vos() const { return vos_; }
  static AllocationLedger Restore(std::map<std::string, VoAccounts> vos);

  // `vo=<name> used=<n>/<alloc>` followed by `member=<dn> used=<n>/<quota>`
  // lines for that VO, names ascending.
  std::string Report() const;

  bool operator==(const AllocationLedger&) const = default;

 private:
  VoAccounts& FindVo(const std::string& vo);
  Account& FindMember(VoAccounts& accounts, const std::string& member);

  std::map<std::string, VoAccounts> vos_;
};

}  // namespace gridauthz

#endif  // GRIDAUTHZ_ENFORCE_H_
