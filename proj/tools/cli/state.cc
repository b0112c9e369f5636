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

#include "cli/state.h"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "json.hpp"

namespace gridauthz::cli {

using nlohmann::json;

namespace {

json SpecJson(const SandboxSpec& s) {
  return {{"max_memory", s.max_memory},
          {"max_disk", s.max_disk},
          {"max_cpu", s.max_cpu},
          {"groups", s.groups}};
}

SandboxSpec SpecFrom(const json& j) {
  SandboxSpec s;
  s.max_memory = j.at("max_memory").get<std::int64_t>();
  s.max_disk = j.at("max_disk").get<std::int64_t>();
  s.max_cpu = j.at("max_cpu").get<std::int64_t>();
  s.groups = j.at("groups").get<std::set<std::string>>();
  return s;
}

template <typename T>
json Optional(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> OptionalFrom(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

json JobJson(const Job& job) {
  return {{"id", job.id},
          {"seq", job.seq},
          {"owner", job.owner},
          {"vo", Optional(job.vo)},
          {"jobtag", Optional(job.jobtag)},
          {"request", SerializeRsl(job.request)},
          {"state", std::string(ToString(job.state))},
          {"account", job.account.name},
          {"dynamic_account", job.dynamic_account},
          {"charged", job.charged},
          {"count", job.count},
          {"reserved", job.reserved},
          {"consumed", job.consumed},
          {"priority", job.priority},
          {"submitted_at", job.submitted_at},
          {"ended_at", Optional(job.ended_at)},
          {"profile",
           {{"runtime", job.profile.runtime},
            {"memory_peak", job.profile.memory_peak},
            {"disk", job.profile.disk}}},
          {"sandbox", SpecJson(job.sandbox)}};
}

Job JobFrom(const json& j) {
  Job job;
  job.id = j.at("id").get<std::string>();
  job.seq = j.at("seq").get<std::uint64_t>();
  job.owner = j.at("owner").get<std::string>();
  job.vo = OptionalFrom<std::string>(j.at("vo"));
  job.jobtag = OptionalFrom<std::string>(j.at("jobtag"));
  job.request = ParseRsl(j.at("request").get<std::string>());
  auto state = ParseJobState(j.at("state").get<std::string>());
  if (!state) throw StateError("job " + job.id + ": unknown state");
  job.state = *state;
  job.account.name = j.at("account").get<std::string>();
  job.dynamic_account = j.at("dynamic_account").get<bool>();
  job.charged = j.at("charged").get<bool>();
  job.count = j.at("count").get<std::int64_t>();
  job.reserved = j.at("reserved").get<std::int64_t>();
  job.consumed = j.at("consumed").get<std::int64_t>();
  job.priority = j.at("priority").get<std::int64_t>();
  job.submitted_at = j.at("submitted_at").get<std::int64_t>();
  job.ended_at = OptionalFrom<std::int64_t>(j.at("ended_at"));
  const json& p = j.at("profile");
  job.profile = {p.at("runtime").get<std::int64_t>(), p.at("memory_peak").get<std::int64_t>(),
                 p.at("disk").get<std::int64_t>()};
  job.sandbox = SpecFrom(j.at("sandbox"));
  if (job.charged && !job.vo) throw StateError("job " + job.id + ": charged without a vo");
  if (job.consumed > job.reserved) throw StateError("job " + job.id + ": consumed > reserved");
  return job;
}

json LedgerJson(const AllocationLedger& ledger) {
  json out = json::object();
  for (const auto& [vo, acc] : ledger.vos()) {
    json members = json::object();
    for (const auto& [dn, m] : acc.members) members[dn] = {{"quota", m.limit}, {"used", m.used}};
    out[vo] = {{"allocation", acc.vo.limit}, {"used", acc.vo.used}, {"members", members}};
  }
  return out;
}

AllocationLedger LedgerFrom(const json& j) {
  std::map<std::string, AllocationLedger::VoAccounts> vos;
  for (const auto& [vo, acc] : j.items()) {
    AllocationLedger::VoAccounts a;
    a.vo = {acc.at("allocation").get<std::int64_t>(), acc.at("used").get<std::int64_t>()};
    for (const auto& [dn, m] : acc.at("members").items()) {
      a.members[dn] = {m.at("quota").get<std::int64_t>(), m.at("used").get<std::int64_t>()};
    }
    vos[vo] = a;
  }
  return AllocationLedger::Restore(std::move(vos));
}

json PoolJson(const DynamicAccountPool& pool) {
  json leases = json::array();
  for (const auto& [account, lease] : pool.leases()) {
    leases.push_back({{"account", account},
                      {"subject", lease.subject},
                      {"expiry", lease.expiry},
                      {"spec", SpecJson(lease.spec)}});
  }
  return {{"free", std::vector<std::string>(pool.free_accounts().begin(),
                                            pool.free_accounts().end())},
          {"leased", leases}};
}

DynamicAccountPool PoolFrom(const json& j) {
  auto free_list = j.at("free").get<std::vector<std::string>>();
  std::map<std::string, LocalAccountLease> leased;
  for (const json& l : j.at("leased")) {
    LocalAccountLease lease;
    lease.account = l.at("account").get<std::string>();
    lease.subject = l.at("subject").get<std::string>();
    lease.expiry = l.at("expiry").get<std::int64_t>();
    lease.spec = SpecFrom(l.at("spec"));
    leased[lease.account] = lease;
  }
  return DynamicAccountPool::Restore({free_list.begin(), free_list.end()}, std::move(leased));
}

json ConfigJson(const EngineConfig& c) {
  json gridmap = json::object();
  for (const auto& [dn, account] : c.gridmap.entries()) gridmap[dn] = account;
  return {{"gridmap", gridmap},
          {"dynamic_accounts", c.dynamic_accounts},
          {"caps",
           {{"max_memory", c.caps.max_memory},
            {"max_disk", c.caps.max_disk},
            {"max_cpu", c.caps.max_cpu},
            {"groups", c.caps.groups}}},
          {"lease_ttl", c.lease_ttl},
          {"max_active", c.max_active},
          {"epoch", c.epoch},
          {"target", c.target}};
}

EngineConfig ConfigFrom(const json& j) {
  EngineConfig c;
  for (const auto& [dn, account] : j.at("gridmap").items()) {
    c.gridmap.Add(dn, account.get<std::string>());
  }
  c.dynamic_accounts = j.at("dynamic_accounts").get<std::vector<std::string>>();
  const json& caps = j.at("caps");
  c.caps.max_memory = caps.at("max_memory").get<std::int64_t>();
  c.caps.max_disk = caps.at("max_disk").get<std::int64_t>();
  c.caps.max_cpu = caps.at("max_cpu").get<std::int64_t>();
  c.caps.groups = caps.at("groups").get<std::set<std::string>>();
  c.lease_ttl = j.at("lease_ttl").get<std::int64_t>();
  c.max_active = j.at("max_active").get<std::size_t>();
  c.epoch = j.at("epoch").get<std::int64_t>();
  c.target = j.at("target").get<std::string>();
  return c;
}

}  // namespace

std::string EncodeState(const SimState& state) {
  const EngineSnapshot& s = state.snapshot;
  json jobs = json::array();
  for (const Job& job : s.jobs) jobs.push_back(JobJson(job));
  json events = json::array();
  for (const Event& e : s.events) {
    events.push_back({{"t", e.time}, {"job", e.job}, {"event", e.name}, {"detail", e.detail}});
  }
  json doc = {{"format", kStateFormat},
              {"version", kStateVersion},
              {"config", ConfigJson(state.config)},
              {"clock", s.clock},
              {"next_seq", s.next_seq},
              {"jobs", jobs},
              {"ledger", LedgerJson(s.ledger)},
              {"pool", PoolJson(s.pool)},
              {"events", events}};
  return doc.dump(2) + "\n";
}

SimState DecodeState(const std::string& text) {
  try {
    json doc = json::parse(text);
    if (doc.at("format") != kStateFormat) throw StateError("not a gridauthz state file");
    if (doc.at("version") != kStateVersion) {
      throw StateError("unsupported state version " + doc.at("version").dump());
    }
    SimState state;
    state.config = ConfigFrom(doc.at("config"));
    EngineSnapshot& s = state.snapshot;
    s.clock = doc.at("clock").get<std::int64_t>();
    s.next_seq = doc.at("next_seq").get<std::uint64_t>();
    for (const json& j : doc.at("jobs")) s.jobs.push_back(JobFrom(j));
    s.ledger = LedgerFrom(doc.at("ledger"));
    s.pool = PoolFrom(doc.at("pool"));
    for (const json& e : doc.at("events")) {
      s.events.push_back({e.at("t").get<std::int64_t>(), e.at("job").get<std::string>(),
                          e.at("event").get<std::string>(), e.at("detail").get<std::string>()});
    }
    return state;
  } catch (const StateError&) {
    throw;
  } catch (const std::exception& e) {
    throw StateError(std::string("corrupt state file: ") + e.what());
  }
}

StateFile::StateFile(const std::string& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw StateError("cannot open " + path + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX) != 0) {
    int err = errno;
    ::close(fd_);
    throw StateError("cannot lock " + path + ": " + std::strerror(err));
  }
}

StateFile::~StateFile() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

std::optional<SimState> StateFile::Load() {
  std::string text;
  char buf[65536];
  if (::lseek(fd_, 0, SEEK_SET) < 0) throw StateError("cannot seek " + path_);
  while (true) {
    ssize_t n = ::read(fd_, buf, sizeof(buf));
    if (n < 0) throw StateError("cannot read " + path_ + ": " + std::strerror(errno));
    if (n == 0) break;
    text.append(buf, static_cast<std::size_t>(n));
  }
  if (text.empty()) return std::nullopt;
  return DecodeState(text);
}

void StateFile::Save(const SimState& state) {
  const std::string text = EncodeState(state);
  if (::ftruncate(fd_, 0) != 0 || ::lseek(fd_, 0, SEEK_SET) < 0) {
    throw StateError("cannot rewrite " + path_ + ": " + std::strerror(errno));
  }
  std::size_t off = 0;
  while (off < text.size()) {
    ssize_t n = ::write(fd_, text.data() + off, text.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StateError("cannot write " + path_ + ": " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
  ::fsync(fd_);
}

}  // namespace gridauthz::cli
