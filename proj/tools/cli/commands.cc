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

#include "cli/commands.h"

#include <ctime>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli/scenario.h"
#include "cli/state.h"
#include "cli/support.h"
#include "gridauthz/jobmgr.h"

namespace gridauthz::cli {
namespace {

struct AuthzFlags {
  std::string resource;
  std::string vo;
  std::string cap;
  std::string registry;
};

struct ConfigFlags {
  std::string gridmap;
  std::vector<std::string> dynamic_accounts;
  std::optional<std::int64_t> epoch;
  std::optional<std::size_t> max_active;
  std::optional<std::int64_t> lease_ttl;
  std::optional<std::int64_t> limit_cpu;
  std::optional<std::int64_t> limit_memory;
  std::optional<std::int64_t> limit_disk;
};

struct Options {
  AuthzFlags authz;
  ConfigFlags config;
  std::string state;
  std::string cred;
  std::string rsl;
  std::string action;
  std::string job;
  std::string jobtag;
  std::string owner;
  std::string output;
  std::string scenario;
  std::optional<std::int64_t> now;
  std::optional<std::int64_t> expiry;
  std::optional<std::int64_t> priority;
  std::int64_t runtime = 0;
  std::int64_t memory = 0;
  std::int64_t disk = 0;
  std::int64_t dt = 0;
  bool explain = false;
};

void AddAuthzFlags(CLI::App* cmd, AuthzFlags& f, bool resource_required) {
  auto* res = cmd->add_option("--resource-policy", f.resource, "resource policy file");
  if (resource_required) res->required();
  auto* vo = cmd->add_option("--vo-policy", f.vo, "vo policy file (pull mode)");
  auto* cap = cmd->add_option("--cap", f.cap, "capability token file (push mode)");
  vo->excludes(cap);
  cmd->add_option("--key-registry", f.registry, "vo key registry file");
}

void AddConfigFlags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--gridmap", f.gridmap, "grid-mapfile");
  cmd->add_option("--dynamic-accounts", f.dynamic_accounts, "pool accounts")->delimiter(',');
  cmd->add_option("--epoch", f.epoch, "unix time at simulated t=0");
  cmd->add_option("--max-active", f.max_active, "concurrent active jobs (0: unlimited)");
  cmd->add_option("--lease-ttl", f.lease_ttl, "dynamic account lease length");
  cmd->add_option("--limit-cpu", f.limit_cpu, "sandbox cpu cap");
  cmd->add_option("--limit-memory", f.limit_memory, "sandbox memory cap");
  cmd->add_option("--limit-disk", f.limit_disk, "sandbox disk cap");
}

KeyRegistry LoadRegistry(const std::string& path) {
  return path.empty() ? KeyRegistry{} : ParseKeyRegistry(ReadFile(path));
}

PolicyDocument LoadPolicy(const std::string& path, PolicySource expected) {
  PolicyDocument doc = ParsePolicy(ReadFile(path));
  if (doc.source != expected) {
    throw InputError(path + ": expected a " + std::string(ToString(expected)) + " policy");
  }
  return doc;
}

AuthzMode BuildMode(const AuthzFlags& f) {
  PolicyDocument resource = LoadPolicy(f.resource, PolicySource::kResource);
  if (!f.cap.empty()) {
    return PushMode{std::move(resource), ParseCapabilityToken(ReadFile(f.cap))};
  }
  PullMode pull{{std::move(resource), std::nullopt}};
  if (!f.vo.empty()) pull.sources.vo = LoadPolicy(f.vo, PolicySource::kVo);
  return pull;
}

void ApplyConfig(const ConfigFlags& f, EngineConfig& c) {
  if (!f.gridmap.empty()) c.gridmap = GridMapFile::Parse(ReadFile(f.gridmap));
  if (f.epoch) c.epoch = *f.epoch;
  if (f.max_active) c.max_active = *f.max_active;
  if (f.lease_ttl) c.lease_ttl = *f.lease_ttl;
  if (f.limit_cpu) c.caps.max_cpu = *f.limit_cpu;
  if (f.limit_memory) c.caps.max_memory = *f.limit_memory;
  if (f.limit_disk) c.caps.max_disk = *f.limit_disk;
}

// Runs `body` against the engine restored from the state file and writes
// the state back, whatever the command's outcome.
int WithEngine(const Options& o, const std::function<int(JobManager&)>& body) {
  StateFile file(o.state);
  std::optional<SimState> loaded = file.Load();
  EngineConfig config = loaded ? loaded->config : EngineConfig{};
  if (!o.config.dynamic_accounts.empty()) {
    if (loaded && loaded->config.dynamic_accounts != o.config.dynamic_accounts) {
      throw InputError("dynamic accounts are fixed when the state file is created");
    }
    config.dynamic_accounts = o.config.dynamic_accounts;
  }
  ApplyConfig(o.config, config);
  config.registry = LoadRegistry(o.authz.registry);
  std::optional<JobManager> engine;
  if (loaded) {
    engine.emplace(config, loaded->snapshot);
  } else {
    engine.emplace(config);
  }
  int code = kExitOk;
  try {
    code = body(*engine);
  } catch (const JobManagerError&) {
    file.Save({engine->config(), engine->Export()});
    throw;
  }
  file.Save({engine->config(), engine->Export()});
  return code;
}

int ReportEngineError(const JobManagerError& e, const Options& o, std::ostream& out,
                      std::ostream& err) {
  err << "gridauthz: " << OutcomeName(e) << ": " << e.what() << "\n";
  if (o.explain && e.decision()) out << Explain(*e.decision());
  return ExitCodeFor(e);
}

int CmdCheck(const Options& o, std::ostream& out) {
  AuthzQuery q;
  q.credential = LoadCredential(ReadFile(o.cred));
  auto action = ParseJobAction(o.action.empty() ? "start" : o.action);
  if (!action) throw InputError("unknown action '" + o.action + "'");
  q.action = *action;
  if (q.action == JobAction::kStart) {
    if (o.rsl.empty()) throw InputError("--rsl is required for start");
    q.target = "gatekeeper";
    q.request = ParseRsl(ReadFile(o.rsl));
  } else {
    q.target = "jobmanager";
    if (!o.jobtag.empty()) q.jobtag = o.jobtag;
    if (!o.owner.empty()) q.job_owner = o.owner;
  }
  AuthzMode mode = BuildMode(o.authz);
  Decision d;
  if (const auto* push = std::get_if<PushMode>(&mode)) {
    std::int64_t now = o.now ? *o.now : static_cast<std::int64_t>(std::time(nullptr));
    d = DecidePush(q, push->resource, push->token, LoadRegistry(o.authz.registry), now);
  } else {
    d = Decide(q, std::get<PullMode>(mode).sources);
  }
  out << ToString(d.effect) << "\n";
  if (o.explain) out << Explain(d);
  return d.permitted() ? kExitOk : kExitRefused;
}

int CmdSubmit(const Options& o, std::ostream& out, std::ostream& err) {
  GridCredential cred = LoadCredential(ReadFile(o.cred));
  std::string rsl = ReadFile(o.rsl);
  AuthzMode mode = BuildMode(o.authz);
  try {
    return WithEngine(o, [&](JobManager& engine) {
      JobHandle h = engine.Submit(cred, rsl, mode, {o.runtime, o.memory, o.disk});
      Job job = engine.Record(h);
      out << "job=" << job.id << " state=" << ToString(job.state) << " reserved=" << job.reserved
          << "\n";
      return kExitOk;
    });
  } catch (const JobManagerError& e) {
    return ReportEngineError(e, o, out, err);
  }
}

int CmdManage(const Options& o, std::ostream& out, std::ostream& err) {
  GridCredential cred = LoadCredential(ReadFile(o.cred));
  auto action = ParseJobAction(o.action);
  if (!action || *action == JobAction::kStart) {
    throw InputError("unknown management action '" + o.action + "'");
  }
  AuthzMode mode = BuildMode(o.authz);
  try {
    return WithEngine(o, [&](JobManager& engine) {
      ManagementResult r = engine.Manage({o.job}, *action, cred, mode, o.priority);
      out << "job=" << r.job.id << " state=" << ToString(r.job.state);
      if (*action == JobAction::kStatus) {
        out << " priority=" << r.job.priority << " consumed=" << r.job.consumed
            << " reserved=" << r.job.reserved;
      }
      out << "\n";
      if (o.explain) out << Explain(r.decision);
      return kExitOk;
    });
  } catch (const JobManagerError& e) {
    return ReportEngineError(e, o, out, err);
  }
}

int CmdTick(const Options& o, std::ostream& out) {
  if (o.dt <= 0) throw InputError("--dt must be positive");
  return WithEngine(o, [&](JobManager& engine) {
    for (const Event& e : engine.Tick(o.dt)) out << e.Format() << "\n";
    return kExitOk;
  });
}

int CmdLedger(const Options& o, std::ostream& out) {
  return WithEngine(o, [&](JobManager& engine) {
    out << engine.Ledger().Report();
    return kExitOk;
  });
}

int CmdIssueCap(const Options& o, std::ostream& out, std::ostream& err) {
  PolicyDocument vo = LoadPolicy(o.authz.vo, PolicySource::kVo);
  GridCredential cred = LoadCredential(ReadFile(o.cred));
  KeyRegistry registry = LoadRegistry(o.authz.registry);
  if (!cred.vo) throw InputError("credential names no VO");
  auto key = registry.find(*cred.vo);
  if (key == registry.end()) throw InputError("no key for VO '" + *cred.vo + "'");
  CapabilityClaims claims;
  try {
    claims = DeriveCapability(vo, cred, o.expiry ? *o.expiry : cred.expiry);
  } catch (const PdpError& e) {
    if (e.kind() != PdpError::Kind::kNoApplicableBlocks) throw;
    err << "gridauthz: no-applicable-blocks: " << e.what() << "\n";
    return kExitRefused;
  }
  std::string text = FormatCapabilityToken(SignCapability(key->second, claims));
  if (o.output.empty()) {
    out << text;
  } else {
    std::ofstream f(o.output, std::ios::binary | std::ios::trunc);
    if (!(f << text)) throw InputError("cannot write " + o.output);
  }
  return kExitOk;
}

int CmdScenario(const Options& o, std::ostream& out, std::ostream& err) {
  std::string script = ReadFile(o.scenario);
  try {
    ScenarioResult result = RunScenario(script);
    out << result.Report();
    return result.passed() ? kExitOk : kExitRefused;
  } catch (const ScriptError& e) {
    err << "gridauthz: scenario: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Grid job authorization simulator", "gridauthz"};
  app.require_subcommand(1);

  CLI::App* check = app.add_subcommand("check", "evaluate one authorization decision");
  AddAuthzFlags(check, o.authz, true);
  check->add_option("--cred", o.cred, "credential file")->required();
  check->add_option("--rsl", o.rsl, "job request file (start)");
  check->add_option("--action", o.action, "action (default start)");
  check->add_option("--jobtag", o.jobtag, "job tag of the managed job");
  check->add_option("--owner", o.owner, "owner DN of the managed job");
  check->add_option("--now", o.now, "unix time for token expiry");
  check->add_flag("--explain", o.explain, "print the decision trace");

  CLI::App* submit = app.add_subcommand("submit", "submit a job through the gatekeeper");
  submit->add_option("--state", o.state, "state file")->required();
  AddAuthzFlags(submit, o.authz, true);
  AddConfigFlags(submit, o.config);
  submit->add_option("--cred", o.cred, "credential file")->required();
  submit->add_option("--rsl", o.rsl, "job request file")->required();
  submit->add_option("--runtime", o.runtime, "simulated cpu-seconds to finish");
  submit->add_option("--memory", o.memory, "simulated peak memory (MB)");
  submit->add_option("--disk", o.disk, "simulated disk use (MB)");
  submit->add_flag("--explain", o.explain, "print the decision trace on denial");

  CLI::App* manage = app.add_subcommand("manage", "cancel, status, suspend, resume or reprioritize");
  manage->add_option("--state", o.state, "state file")->required();
  AddAuthzFlags(manage, o.authz, true);
  manage->add_option("--cred", o.cred, "credential file")->required();
  manage->add_option("--job", o.job, "job id")->required();
  manage->add_option("--action", o.action, "management action")->required();
  manage->add_option("--priority", o.priority, "new priority for set_priority");
  manage->add_flag("--explain", o.explain, "print the decision trace");

  CLI::App* tick = app.add_subcommand("tick", "advance the simulated clock");
  tick->add_option("--state", o.state, "state file")->required();
  tick->add_option("--dt", o.dt, "sim-seconds")->required();

  CLI::App* ledger = app.add_subcommand("ledger", "print the allocation ledger");
  ledger->add_option("--state", o.state, "state file")->required();

  CLI::App* issue = app.add_subcommand("issue-cap", "sign a capability token");
  issue->add_option("--vo-policy", o.authz.vo, "vo policy file")->required();
  issue->add_option("--cred", o.cred, "credential file")->required();
  issue->add_option("--key-registry", o.authz.registry, "vo key registry file")->required();
  issue->add_option("--expiry", o.expiry, "unix expiry (default: the credential's)");
  issue->add_option("--output", o.output, "write the token here instead of stdout");

  CLI::App* scenario = app.add_subcommand("scenario", "run a scenario script");
  scenario->add_option("script", o.scenario, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*check) return CmdCheck(o, out);
    if (*submit) return CmdSubmit(o, out, err);
    if (*manage) return CmdManage(o, out, err);
    if (*tick) return CmdTick(o, out);
    if (*ledger) return CmdLedger(o, out);
    if (*issue) return CmdIssueCap(o, out, err);
    return CmdScenario(o, out, err);
  } catch (const StateError& e) {
    err << "gridauthz: state: " << e.what() << "\n";
    return kExitState;
  } catch (const std::exception& e) {
    err << "gridauthz: " << DescribeInputError(e) << "\n";
    return kExitInput;
  }
}

}  // namespace gridauthz::cli
