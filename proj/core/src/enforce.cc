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

#include "gridauthz/enforce.h"

#include <algorithm>

#include "gridauthz/pdp.h"

namespace gridauthz {

SandboxSpec DeriveSandboxSpec(const RslRequest& request, const SandboxCaps& caps) {
  SandboxSpec spec;
  spec.max_memory = caps.max_memory;
  if (const RslValue* mem = request.Find("maxmemory")) {
    if (const auto* n = std::get_if<std::int64_t>(mem)) {
      spec.max_memory = std::min(*n, caps.max_memory);
    }
  }
  spec.max_disk = caps.max_disk;
  spec.max_cpu = caps.max_cpu;
  if (auto charge = ChargeEstimate(request)) spec.max_cpu = std::min(*charge, caps.max_cpu);
  spec.groups = caps.groups;
  return spec;
}

std::string_view ToString(LimitDimension dim) {
  switch (dim) {
    case LimitDimension::kCpu: return "cpu";
    case LimitDimension::kMemory: return "memory";
    case LimitDimension::kDisk: return "disk";
  }
  return "?";
}

std::optional<LimitDimension> RecordUsage(const SandboxSpec& spec, const UsageSample& cum) {
  if (cum.cpu > spec.max_cpu) return LimitDimension::kCpu;
  if (cum.memory > spec.max_memory) return LimitDimension::kMemory;
  if (cum.disk > spec.max_disk) return LimitDimension::kDisk;
  return std::nullopt;
}

DynamicAccountPool::DynamicAccountPool(const std::vector<std::string>& accounts) {
  for (const auto& a : accounts) AddAccount(a);
}

void DynamicAccountPool::AddAccount(const std::string& account) {
  if (leased_.count(account) != 0) return;
  if (std::find(free_.begin(), free_.end(), account) != free_.end()) return;
  free_.push_back(account);
}

LocalAccountLease DynamicAccountPool::Lease(const std::string& subject,
                                            const SandboxSpec& spec, std::int64_t ttl,
                                            std::int64_t now) {
  if (free_.empty()) {
    throw EnforceError(EnforceError::Kind::kPoolExhausted, "dynamic account pool exhausted");
  }
  LocalAccountLease lease{free_.front(), subject, spec, now + ttl};
  free_.pop_front();
  leased_.emplace(lease.account, lease);
  return lease;
}

void DynamicAccountPool::Release(const std::string& account) {
  auto it = leased_.find(account);
  if (it == leased_.end()) {
    throw EnforceError(EnforceError::Kind::kUnknownLease,
                       "no active lease on account '" + account + "'");
  }
  leased_.erase(it);
  free_.push_back(account);
}

void DynamicAccountPool::Renew(const std::string& account, std::int64_t expiry) {
  auto it = leased_.find(account);
  if (it == leased_.end()) {
    throw EnforceError(EnforceError::Kind::kUnknownLease,
                       "no active lease on account '" + account + "'");
  }
  it->second.expiry = expiry;
}

const LocalAccountLease* DynamicAccountPool::FindLease(const std::string& account) const {
  auto it = leased_.find(account);
  return it == leased_.end() ? nullptr : &it->second;
}

DynamicAccountPool DynamicAccountPool::Restore(std::deque<std::string> free,
                                               std::map<std::string, LocalAccountLease> leased) {
  DynamicAccountPool pool;
  for (const auto& a : free) {
    if (leased.count(a) != 0 ||
        std::count(free.begin(), free.end(), a) != 1) {
      throw EnforceError(EnforceError::Kind::kUnknownLease,
                         "account '" + a + "' is both free and leased, or listed twice");
    }
  }
  pool.free_ = std::move(free);
  pool.leased_ = std::move(leased);
  return pool;
}

std::string_view ToString(QuotaScope scope) {
  return scope == QuotaScope::kVo ? "vo" : "member";
}

void AllocationLedger::ConfigureVo(const std::string& vo, std::int64_t allocation) {
  auto& accounts = vos_[vo];
  if (allocation < accounts.vo.used || allocation < 0) {
    throw EnforceError(EnforceError::Kind::kInvalidAmount,
                       "allocation " + std::to_string(allocation) + " for vo '" + vo +
                           "' is below its usage " + std::to_string(accounts.vo.used));
  }
  accounts.vo.limit = allocation;
}

void AllocationLedger::ConfigureMember(const std::string& vo, const std::string& member,
                                       std::int64_t quota) {
  auto& accounts = FindVo(vo);
  auto& account = accounts.members[member];
  if (quota < account.used || quota < 0) {
    throw EnforceError(EnforceError::Kind::kInvalidAmount,
                       "quota " + std::to_string(quota) + " for '" + member +
                           "' is below its usage " + std::to_string(account.used));
  }
  account.limit = quota;
}

bool AllocationLedger::HasMember(std::string_view vo, std::string_view member) const {
  auto it = vos_.find(std::string(vo));
  return it != vos_.end() && it->second.members.count(std::string(member)) != 0;
}

AllocationLedger::VoAccounts& AllocationLedger::FindVo(const std::string& vo) {
  auto it = vos_.find(vo);
  if (it == vos_.end()) {
    throw EnforceError(EnforceError::Kind::kUnknownVo, "unknown vo '" + vo + "'");
  }
  return it->second;
}

AllocationLedger::Account& AllocationLedger::FindMember(VoAccounts& accounts,
                                                        const std::string& member) {
  auto it = accounts.members.find(member);
  if (it == accounts.members.end()) {
    throw EnforceError(EnforceError::Kind::kUnknownMember, "unknown member '" + member + "'");
  }
  return it->second;
}

ReserveOutcome AllocationLedger::Reserve(const std::string& vo, const std::string& member,
                                         std::int64_t amount) {
  if (amount < 0) {
    throw EnforceError(EnforceError::Kind::kInvalidAmount, "negative reservation");
  }
  auto& accounts = FindVo(vo);
  auto& account = FindMember(accounts, member);
  if (amount > account.limit - account.used) return {QuotaScope::kMember};
  if (amount > accounts.vo.limit - accounts.vo.used) return {QuotaScope::kVo};
  account.used += amount;
  accounts.vo.used += amount;
  return {};
}

void AllocationLedger::Settle(const std::string& vo, const std::string& member,
                              std::int64_t reserved, std::int64_t consumed) {
  auto& accounts = FindVo(vo);
  auto& account = FindMember(accounts, member);
  if (consumed < 0 || consumed > reserved || reserved > account.used ||
      reserved > accounts.vo.used) {
    throw EnforceError(EnforceError::Kind::kUnderflow,
                       "settle of " + std::to_string(consumed) + "/" +
                           std::to_string(reserved) + " exceeds the reservation");
  }
  std::int64_t refund = reserved - consumed;
  account.used -= refund;
  accounts.vo.used -= refund;
}

AllocationLedger AllocationLedger::Restore(std::map<std::string, VoAccounts> vos) {
  for (const auto& [name, accounts] : vos) {
    std::int64_t member_total = 0;
    bool ok = accounts.vo.used >= 0 && accounts.vo.used <= accounts.vo.limit;
    for (const auto& [member, account] : accounts.members) {
      ok = ok && account.used >= 0 && account.used <= account.limit;
      member_total += account.used;
    }
    if (!ok || member_total > accounts.vo.used) {
      throw EnforceError(EnforceError::Kind::kInvalidAmount,
                         "inconsistent ledger state for vo '" + name + "'");
    }
  }
  AllocationLedger ledger;
  ledger.vos_ = std::move(vos);
  return ledger;
}

std::string AllocationLedger::Report() const {
  std::string out;
  for (const auto& [name, accounts] : vos_) {
    out += "vo=" + name + " used=" + std::to_string(accounts.vo.used) + "/" +
           std::to_string(accounts.vo.limit) + "\n";
    for (const auto& [member, account] : accounts.members) {
      out += "member=" + member + " used=" + std::to_string(account.used) + "/" +
             std::to_string(account.limit) + "\n";
    }
  }
  return out;
}

}  // namespace gridauthz
