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

#include <gtest/gtest.h>

#include <random>

namespace gridauthz {
namespace {

constexpr char kAlice[] = "/O=Grid/CN=alice";
constexpr char kBob[] = "/O=Grid/CN=bob";

SandboxSpec Spec(std::int64_t cpu, std::int64_t mem, std::int64_t disk) {
  return {mem, disk, cpu, {}};
}

template <typename F>
EnforceError::Kind KindOf(F&& f) {
  try {
    f();
  } catch (const EnforceError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return EnforceError::Kind::kInvalidAmount;
}

TEST(Pool, FifoLeasing) {
  DynamicAccountPool pool({"u1", "u2"});
  EXPECT_EQ(pool.Lease(kAlice, Spec(1, 1, 1), 10, 0).account, "u1");
  EXPECT_EQ(pool.Lease(kAlice, Spec(1, 1, 1), 10, 0).account, "u2");
  EXPECT_EQ(KindOf([&] { pool.Lease(kBob, Spec(1, 1, 1), 10, 0); }),
            EnforceError::Kind::kPoolExhausted);
}

TEST(Pool, ReleaseReturnsAndScrubs) {
  DynamicAccountPool pool({"u1", "u2"});
  LocalAccountLease lease = pool.Lease(kAlice, Spec(5, 6, 7), 10, 3);
  EXPECT_EQ(lease.expiry, 13);
  EXPECT_EQ(lease.spec, Spec(5, 6, 7));
  pool.Release(lease.account);
  EXPECT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool.FindLease("u1"), nullptr);
  EXPECT_EQ(KindOf([&] { pool.Release("u1"); }), EnforceError::Kind::kUnknownLease);
  // u2 is next; the released u1 went to the back and serves a new subject.
  EXPECT_EQ(pool.Lease(kBob, Spec(1, 1, 1), 10, 0).account, "u2");
  LocalAccountLease reuse = pool.Lease(kBob, Spec(1, 1, 1), 10, 0);
  EXPECT_EQ(reuse.account, "u1");
  EXPECT_EQ(reuse.subject, kBob);
}

TEST(Pool, RenewAndRestore) {
  DynamicAccountPool pool({"u1"});
  pool.Lease(kAlice, Spec(1, 1, 1), 10, 0);
  pool.Renew("u1", 99);
  EXPECT_EQ(pool.FindLease("u1")->expiry, 99);
  EXPECT_EQ(KindOf([&] { pool.Renew("u9", 1); }), EnforceError::Kind::kUnknownLease);
  DynamicAccountPool copy = DynamicAccountPool::Restore(pool.free_accounts(), pool.leases());
  EXPECT_EQ(copy.leases(), pool.leases());
}

TEST(Ledger, MemberQuotaExceeded) {
  AllocationLedger l;
  l.ConfigureVo("fusion", 1000);
  l.ConfigureMember("fusion", kAlice, 600);
  EXPECT_TRUE(l.Reserve("fusion", kAlice, 600).ok());
  EXPECT_EQ(l.Reserve("fusion", kAlice, 1).exceeded, QuotaScope::kMember);
}

TEST(Ledger, VoAllocationExceeded) {
  AllocationLedger l;
  l.ConfigureVo("fusion", 1000);
  l.ConfigureMember("fusion", kAlice, 600);
  l.ConfigureMember("fusion", kBob, 600);
  EXPECT_TRUE(l.Reserve("fusion", kAlice, 600).ok());
  EXPECT_EQ(l.Reserve("fusion", kBob, 500).exceeded, QuotaScope::kVo);
  // All-or-nothing: bob's member account is untouched.
  EXPECT_EQ(l.vos().at("fusion").members.at(kBob).used, 0);
  EXPECT_EQ(l.vos().at("fusion").vo.used, 600);
}

TEST(Ledger, ZeroReserve) {
  AllocationLedger l;
  l.ConfigureVo("fusion", 10);
  l.ConfigureMember("fusion", kAlice, 10);
  AllocationLedger before = l;
  EXPECT_TRUE(l.Reserve("fusion", kAlice, 0).ok());
  EXPECT_EQ(l, before);
}

TEST(Ledger, Errors) {
  AllocationLedger l;
  l.ConfigureVo("fusion", 10);
  EXPECT_EQ(KindOf([&] { l.Reserve("astro", kAlice, 1); }), EnforceError::Kind::kUnknownVo);
  EXPECT_EQ(KindOf([&] { l.Reserve("fusion", kAlice, 1); }), EnforceError::Kind::kUnknownMember);
  l.ConfigureMember("fusion", kAlice, 10);
  EXPECT_EQ(KindOf([&] { l.Reserve("fusion", kAlice, -1); }), EnforceError::Kind::kInvalidAmount);
  l.Reserve("fusion", kAlice, 8);
  EXPECT_EQ(KindOf([&] { l.ConfigureVo("fusion", 5); }), EnforceError::Kind::kInvalidAmount);
}

TEST(Ledger, SettleRefunds) {
  AllocationLedger l;
  l.ConfigureVo("fusion", 1000);
  l.ConfigureMember("fusion", kAlice, 600);
  l.Reserve("fusion", kAlice, 100);
  l.Settle("fusion", kAlice, 100, 40);
  EXPECT_EQ(l.vos().at("fusion").vo.used, 40);
  EXPECT_EQ(l.vos().at("fusion").members.at(kAlice).used, 40);
  l.Reserve("fusion", kAlice, 50);
  l.Settle("fusion", kAlice, 50, 50);
  EXPECT_EQ(l.vos().at("fusion").vo.used, 90);
  EXPECT_EQ(KindOf([&] { l.Settle("fusion", kAlice, 10, 11); }), EnforceError::Kind::kUnderflow);
  EXPECT_EQ(KindOf([&] { l.Settle("fusion", kAlice, 500, 0); }), EnforceError::Kind::kUnderflow);
}

TEST(Ledger, Report) {
  AllocationLedger l;
  l.ConfigureVo("fusion", 1000);
  l.ConfigureMember("fusion", kBob, 600);
  l.ConfigureMember("fusion", kAlice, 600);
  l.Reserve("fusion", kAlice, 200);
  EXPECT_EQ(l.Report(),
            "vo=fusion used=200/1000\n"
            "member=/O=Grid/CN=alice used=200/600\n"
            "member=/O=Grid/CN=bob used=0/600\n");
}

TEST(RecordUsage, Boundaries) {
  SandboxSpec s = Spec(100, 50, 20);
  EXPECT_EQ(RecordUsage(s, {101, 0, 0}), LimitDimension::kCpu);
  EXPECT_EQ(RecordUsage(s, {100, 50, 20}), std::nullopt);
  EXPECT_EQ(RecordUsage(s, {100, 51, 21}), LimitDimension::kMemory);
  EXPECT_EQ(RecordUsage(s, {101, 51, 21}), LimitDimension::kCpu);
  EXPECT_EQ(RecordUsage(s, {0, 0, 21}), LimitDimension::kDisk);
}

TEST(DeriveSandbox, MinOfRequestAndCap) {
  SandboxCaps caps;
  caps.max_cpu = 1000;
  caps.max_memory = 512;
  caps.groups = {"gridusers"};
  SandboxSpec s = DeriveSandboxSpec(ParseRsl("&(count=4)(maxcputime=100)(maxmemory=2048)"), caps);
  EXPECT_EQ(s.max_cpu, 400);
  EXPECT_EQ(s.max_memory, 512);
  EXPECT_EQ(s.max_disk, caps.max_disk);
  EXPECT_EQ(s.groups, caps.groups);
  SandboxSpec big = DeriveSandboxSpec(ParseRsl("&(count=40)(maxcputime=100)"), caps);
  EXPECT_EQ(big.max_cpu, 1000);
  EXPECT_EQ(DeriveSandboxSpec(ParseRsl("&(count=1)"), caps).max_cpu, 1000);
}

// --- properties -------------------------------------------------------------

void CheckLedgerInvariants(const AllocationLedger& l) {
  for (const auto& [vo, acc] : l.vos()) {
    ASSERT_GE(acc.vo.used, 0);
    ASSERT_LE(acc.vo.used, acc.vo.limit);
    std::int64_t sum = 0;
    for (const auto& [m, a] : acc.members) {
      ASSERT_GE(a.used, 0);
      ASSERT_LE(a.used, a.limit);
      sum += a.used;
    }
    ASSERT_LE(sum, acc.vo.used);
  }
}

TEST(EnforceProperty, LedgerConservation) {
  std::mt19937_64 rng(31);
  const std::vector<std::string> members = {kAlice, kBob, "/O=Grid/CN=carol"};
  AllocationLedger l;
  l.ConfigureVo("fusion", 5000);
  for (const auto& m : members) l.ConfigureMember("fusion", m, 2500);
  struct Open {
    std::string member;
    std::int64_t amount;
  };
  std::vector<Open> open;
  std::int64_t model_used = 0;  // independent running total
  for (int op = 0; op < 20000; ++op) {
    if (open.empty() || rng() % 2 == 0) {
      const std::string& m = members[rng() % members.size()];
      std::int64_t amount = static_cast<std::int64_t>(rng() % 900);
      AllocationLedger before = l;
      if (l.Reserve("fusion", m, amount).ok()) {
        open.push_back({m, amount});
        model_used += amount;
      } else {
        ASSERT_EQ(l, before);
      }
    } else {
      std::size_t i = rng() % open.size();
      std::int64_t consumed = static_cast<std::int64_t>(rng() % (open[i].amount + 1));
      l.Settle("fusion", open[i].member, open[i].amount, consumed);
      model_used -= open[i].amount - consumed;
      open.erase(open.begin() + static_cast<long>(i));
    }
    CheckLedgerInvariants(l);
    ASSERT_EQ(l.vos().at("fusion").vo.used, model_used);
  }
}

TEST(EnforceProperty, NoLostAccounts) {
  std::mt19937_64 rng(32);
  DynamicAccountPool pool({"d1", "d2", "d3", "d4", "d5"});
  std::vector<std::string> held;
  for (int op = 0; op < 20000; ++op) {
    if (pool.HasFree() && (held.empty() || rng() % 2 == 0)) {
      held.push_back(pool.Lease(kAlice, Spec(1, 1, 1), 10, op).account);
    } else if (!held.empty()) {
      std::size_t i = rng() % held.size();
      pool.Release(held[i]);
      held.erase(held.begin() + static_cast<long>(i));
    }
    ASSERT_EQ(pool.size(), 5u);
    ASSERT_EQ(pool.leases().size(), held.size());
    for (const auto& a : pool.free_accounts()) ASSERT_EQ(pool.leases().count(a), 0u);
  }
}

TEST(EnforceProperty, LimitMonotonicity) {
  std::mt19937_64 rng(33);
  for (int job = 0; job < 2000; ++job) {
    SandboxSpec s = Spec(1 + rng() % 200, 1 + rng() % 200, 1 + rng() % 200);
    UsageSample cum;
    bool breached = false;
    for (int step = 0; step < 20; ++step) {
      cum.cpu += static_cast<std::int64_t>(rng() % 30);
      cum.memory = std::max<std::int64_t>(cum.memory, rng() % 250);
      cum.disk += static_cast<std::int64_t>(rng() % 20);
      bool now = RecordUsage(s, cum).has_value();
      if (breached) {
        ASSERT_TRUE(now);
      }
      breached = breached || now;
    }
  }
}

}  // namespace
}  // namespace gridauthz
