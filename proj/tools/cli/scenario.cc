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

#include "cli/scenario.h"

#include <charconv>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "cli/support.h"
#include "gridauthz/jobmgr.h"

namespace gridauthz::cli {

ScriptError::ScriptError(int step, int line, const std::string& reason)
    : std::runtime_error("step " + std::to_string(step) + " (line " + std::to_string(line) +
                         "): " + reason),
      step_(step),
      line_(line) {}

bool ScenarioResult::passed() const {
  for (const ExpectResult& e : expects) {
    if (!e.passed) return false;
  }
  return true;
}

std::string ScenarioResult::Report() const {
  if (expects.empty()) return "";
  std::ostringstream out;
  int failed = 0;
  for (const ExpectResult& e : expects) {
    out << (e.passed ? "PASS" : "FAIL") << " step " << e.step << " (line " << e.line
        << "): " << e.text << "\n";
    if (!e.passed) {
      ++failed;
      std::istringstream lines(e.detail);
      for (std::string l; std::getline(lines, l);) out << "    " << l << "\n";
    }
  }
  out << expects.size() << " expectations, " << failed << " failed\n";
  return out.str();
}

namespace {

struct Step {
  int number = 0;
  int line = 0;
  std::string label;
  std::string keyword;
  std::vector<std::string> args;
  std::optional<std::string> body;
  std::string text;  // source line without the heredoc marker
};

std::string Trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Whitespace-separated words; double quotes group and may appear inside a
// word (key="a b"), with backslash escapes inside quotes.
std::optional<std::vector<std::string>> Tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_word = false;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '\\' && i + 1 < line.size()) {
        cur += line[++i];
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == ' ' || c == '\t' || c == '\r') {
      if (in_word) out.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      in_word = true;
      if (c == '"') {
        quoted = true;
      } else {
        cur += c;
      }
    }
  }
  if (quoted) return std::nullopt;
  if (in_word) out.push_back(std::move(cur));
  return out;
}

std::vector<Step> ParseScript(std::string_view script) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < script.size()) {
    std::size_t nl = script.find('\n', pos);
    if (nl == std::string_view::npos) nl = script.size();
    lines.emplace_back(script.substr(pos, nl - pos));
    pos = nl + 1;
  }
  std::vector<Step> steps;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string trimmed = Trim(lines[i]);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    Step step;
    step.number = static_cast<int>(steps.size()) + 1;
    step.line = static_cast<int>(i) + 1;
    auto tokens = Tokenize(trimmed);
    if (!tokens) throw ScriptError(step.number, step.line, "unterminated quote");
    if (!tokens->empty() && tokens->front().size() > 1 && tokens->front().back() == ':') {
      step.label = tokens->front().substr(0, tokens->front().size() - 1);
      tokens->erase(tokens->begin());
    }
    if (tokens->empty()) throw ScriptError(step.number, step.line, "label without a step");
    step.text = trimmed;
    if (tokens->back().size() > 2 && tokens->back().rfind("<<", 0) == 0) {
      const std::string tag = tokens->back().substr(2);
      tokens->pop_back();
      step.text = Trim(trimmed.substr(0, trimmed.rfind("<<")));
      std::string body;
      std::size_t j = i + 1;
      for (; j < lines.size() && Trim(lines[j]) != tag; ++j) body += lines[j] + "\n";
      if (j == lines.size()) {
        throw ScriptError(step.number, step.line, "heredoc '" + tag + "' is not terminated");
      }
      step.body = std::move(body);
      i = j;
    }
    step.keyword = tokens->front();
    step.args.assign(tokens->begin() + 1, tokens->end());
    if (!step.label.empty()) step.text = step.text.substr(step.text.find(':') + 1);
    step.text = Trim(step.text);
    steps.push_back(std::move(step));
  }
  return steps;
}

struct LabelRecord {
  std::string outcome;
  std::optional<Decision> decision;
  std::optional<std::string> job;
};

class Runner {
 public:
  ScenarioResult Run(const std::vector<Step>& steps) {
    for (const Step& s : steps) {
      step_ = &s;
      Execute(s);
    }
    return std::move(result_);
  }

 private:
  [[noreturn]] void Fail(const std::string& reason) const {
    throw ScriptError(step_->number, step_->line, reason);
  }

  std::int64_t Int(const std::string& text) const {
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) Fail("not an integer: " + text);
    return v;
  }

  // key=value arguments from `skip` on.
  std::map<std::string, std::string> Keys(const std::vector<std::string>& args,
                                          std::size_t skip = 0) const {
    std::map<std::string, std::string> out;
    for (std::size_t i = skip; i < args.size(); ++i) {
      std::size_t eq = args[i].find('=');
      if (eq == std::string::npos || eq == 0) Fail("expected key=value, got '" + args[i] + "'");
      if (!out.emplace(args[i].substr(0, eq), args[i].substr(eq + 1)).second) {
        Fail("duplicate key '" + args[i].substr(0, eq) + "'");
      }
    }
    return out;
  }

  static std::optional<std::string> Get(const std::map<std::string, std::string>& kv,
                                        const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  }

  std::string Require(const std::map<std::string, std::string>& kv, const std::string& key) const {
    auto v = Get(kv, key);
    if (!v) Fail("missing " + key + "=");
    return *v;
  }

  void CheckKeys(const std::map<std::string, std::string>& kv,
                 std::initializer_list<const char*> allowed) const {
    for (const auto& [k, v] : kv) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) Fail("unknown key '" + k + "'");
    }
  }

  const std::string& Body() const {
    if (!step_->body) Fail("step needs a <<TAG body");
    return *step_->body;
  }

  const PolicyDocument& Policy(const std::string& name, PolicySource source) const {
    auto it = policies_.find(name);
    if (it == policies_.end()) Fail("unknown policy '" + name + "'");
    if (it->second.source != source) {
      Fail("policy '" + name + "' is not a " + std::string(ToString(source)) + " policy");
    }
    return it->second;
  }

  const GridCredential& Cred(const std::string& name) const {
    auto it = creds_.find(name);
    if (it == creds_.end()) Fail("unknown credential '" + name + "'");
    return it->second;
  }

  AuthzMode Mode(const std::map<std::string, std::string>& kv) const {
    PolicyDocument resource = Policy(Require(kv, "resource"), PolicySource::kResource);
    auto vo = Get(kv, "vo");
    auto cap = Get(kv, "cap");
    if (vo && cap) Fail("vo= and cap= are exclusive");
    if (cap) {
      auto it = caps_.find(*cap);
      if (it == caps_.end()) Fail("unknown capability '" + *cap + "'");
      return PushMode{std::move(resource), it->second};
    }
    PullMode pull{{std::move(resource), std::nullopt}};
    if (vo) pull.sources.vo = Policy(*vo, PolicySource::kVo);
    return pull;
  }

  JobManager& Engine() {
    if (!engine_) {
      config_.registry = registry_;
      engine_ = std::make_unique<JobManager>(config_);
    }
    return *engine_;
  }

  void Record(LabelRecord record) {
    if (step_->label.empty()) return;
    if (!labels_.emplace(step_->label, std::move(record)).second) {
      Fail("duplicate label '" + step_->label + "'");
    }
  }

  template <typename F>
  auto Guard(F&& f) -> decltype(f()) {
    try {
      return f();
    } catch (const ScriptError&) {
      throw;
    } catch (const JobManagerError&) {
      throw;
    } catch (const std::exception& e) {
      Fail(DescribeInputError(e));
    }
  }

  void Execute(const Step& s) {
    const std::string& k = s.keyword;
    if (k == "config") return DoConfig(s);
    if (k == "load-policy") return DoLoadPolicy(s);
    if (k == "load-cred") return DoLoadCred(s);
    if (k == "vo-key") return DoVoKey(s);
    if (k == "issue-cap") return DoIssueCap(s);
    if (k == "submit") return DoSubmit(s);
    if (k == "manage") return DoManage(s);
    if (k == "tick") return DoTick(s);
    if (k == "check") return DoCheck(s);
    if (k == "expect") return DoExpect(s);
    Fail("unknown step '" + k + "'");
  }

  void DoConfig(const Step& s) {
    if (engine_) Fail("config must precede the first simulator step");
    if (s.args.empty()) Fail("config needs a setting");
    const std::string& what = s.args[0];
    auto single = [&] {
      if (s.args.size() != 2) Fail("config " + what + " takes one value");
      return Int(s.args[1]);
    };
    if (what == "gridmap") {
      config_.gridmap = Guard([&] { return GridMapFile::Parse(Body()); });
    } else if (what == "dynamic-accounts") {
      config_.dynamic_accounts.assign(s.args.begin() + 1, s.args.end());
    } else if (what == "epoch") {
      config_.epoch = single();
    } else if (what == "max-active") {
      config_.max_active = static_cast<std::size_t>(single());
    } else if (what == "lease-ttl") {
      config_.lease_ttl = single();
    } else if (what == "caps") {
      auto kv = Keys(s.args, 1);
      CheckKeys(kv, {"cpu", "memory", "disk"});
      if (auto v = Get(kv, "cpu")) config_.caps.max_cpu = Int(*v);
      if (auto v = Get(kv, "memory")) config_.caps.max_memory = Int(*v);
      if (auto v = Get(kv, "disk")) config_.caps.max_disk = Int(*v);
    } else {
      Fail("unknown config setting '" + what + "'");
    }
  }

  void DoLoadPolicy(const Step& s) {
    if (s.args.size() != 1) Fail("load-policy takes a name");
    policies_[s.args[0]] = Guard([&] { return ParsePolicy(Body()); });
  }

  void DoLoadCred(const Step& s) {
    if (s.args.size() != 1) Fail("load-cred takes a name");
    creds_[s.args[0]] = Guard([&] { return LoadCredential(Body()); });
  }

  void DoVoKey(const Step& s) {
    if (s.args.size() != 2) Fail("vo-key takes a VO name and a hex key");
    if (engine_) Fail("vo-key must precede the first simulator step");
    auto key = ParseVoKey(s.args[1]);
    if (!key) Fail("bad key for VO '" + s.args[0] + "'");
    registry_[s.args[0]] = *key;
  }

  void DoIssueCap(const Step& s) {
    if (s.args.empty()) Fail("issue-cap takes a name");
    auto kv = Keys(s.args, 1);
    CheckKeys(kv, {"vo", "cred", "expiry"});
    const PolicyDocument& vo = Policy(Require(kv, "vo"), PolicySource::kVo);
    const GridCredential& cred = Cred(Require(kv, "cred"));
    if (!cred.vo) Fail("credential names no VO");
    auto key = registry_.find(*cred.vo);
    if (key == registry_.end()) Fail("no key for VO '" + *cred.vo + "'");
    std::int64_t expiry = cred.expiry;
    if (auto v = Get(kv, "expiry")) expiry = Int(*v);
    try {
      CapabilityClaims claims = DeriveCapability(vo, cred, expiry);
      caps_[s.args[0]] = SignCapability(key->second, claims);
      Record({"ok", std::nullopt, std::nullopt});
    } catch (const PdpError& e) {
      if (e.kind() != PdpError::Kind::kNoApplicableBlocks) Fail(e.what());
      Record({"no-applicable-blocks", std::nullopt, std::nullopt});
    }
  }

  void DoSubmit(const Step& s) {
    auto kv = Keys(s.args);
    CheckKeys(kv, {"cred", "resource", "vo", "cap", "runtime", "memory", "disk", "rsl"});
    const GridCredential& cred = Cred(Require(kv, "cred"));
    AuthzMode mode = Mode(kv);
    std::string rsl;
    if (auto inline_rsl = Get(kv, "rsl")) {
      rsl = *inline_rsl;
    } else {
      rsl = Body();
    }
    SimProfile profile;
    if (auto v = Get(kv, "runtime")) profile.runtime = Int(*v);
    if (auto v = Get(kv, "memory")) profile.memory_peak = Int(*v);
    if (auto v = Get(kv, "disk")) profile.disk = Int(*v);
    JobManager& engine = Engine();
    try {
      JobHandle h = engine.Submit(cred, rsl, mode, profile);
      Record({"ok", std::nullopt, h.id});
    } catch (const JobManagerError& e) {
      Record({OutcomeName(e), e.decision(), std::nullopt});
    }
  }

  std::string JobId(const std::string& ref) const {
    auto it = labels_.find(ref);
    if (it == labels_.end()) return ref;  // a literal job id
    if (!it->second.job) Fail("label '" + ref + "' did not create a job");
    return *it->second.job;
  }

  void DoManage(const Step& s) {
    auto kv = Keys(s.args);
    CheckKeys(kv, {"job", "action", "cred", "resource", "vo", "cap", "priority"});
    std::string id = JobId(Require(kv, "job"));
    auto action = ParseJobAction(Require(kv, "action"));
    if (!action) Fail("unknown action '" + Require(kv, "action") + "'");
    const GridCredential& cred = Cred(Require(kv, "cred"));
    AuthzMode mode = Mode(kv);
    std::optional<std::int64_t> priority;
    if (auto v = Get(kv, "priority")) priority = Int(*v);
    JobManager& engine = Engine();
    try {
      ManagementResult r = engine.Manage({id}, *action, cred, mode, priority);
      Record({"ok", r.decision, id});
    } catch (const JobManagerError& e) {
      Record({OutcomeName(e), e.decision(), id});
    }
  }

  void DoTick(const Step& s) {
    if (s.args.size() != 1) Fail("tick takes a duration");
    std::int64_t dt = Int(s.args[0]);
    if (dt <= 0) Fail("tick duration must be positive");
    Engine().Tick(dt);
  }

  void DoCheck(const Step& s) {
    auto kv = Keys(s.args);
    CheckKeys(kv, {"cred", "resource", "vo", "cap", "action", "jobtag", "owner", "now", "rsl"});
    AuthzQuery q;
    q.credential = Cred(Require(kv, "cred"));
    auto action = ParseJobAction(Get(kv, "action").value_or("start"));
    if (!action) Fail("unknown action");
    q.action = *action;
    if (q.action == JobAction::kStart) {
      q.target = "gatekeeper";
      std::string rsl = Get(kv, "rsl") ? *Get(kv, "rsl") : Body();
      q.request = Guard([&] { return ParseRsl(rsl); });
    } else {
      q.target = "jobmanager";
      q.jobtag = Get(kv, "jobtag");
      if (auto owner = Get(kv, "owner")) {
        auto it = creds_.find(*owner);
        q.job_owner = it == creds_.end() ? *owner : it->second.subject;
      }
    }
    std::int64_t now = config_.epoch + (engine_ ? engine_->Now() : 0);
    if (auto v = Get(kv, "now")) now = Int(*v);
    AuthzMode mode = Mode(kv);
    Decision d = Guard([&] {
      if (const auto* push = std::get_if<PushMode>(&mode)) {
        return DecidePush(q, push->resource, push->token, registry_, now);
      }
      return Decide(q, std::get<PullMode>(mode).sources);
    });
    Record({std::string(ToString(d.effect)), d, std::nullopt});
  }

  const LabelRecord& Label(const std::string& name) const {
    auto it = labels_.find(name);
    if (it == labels_.end()) Fail("unknown label '" + name + "'");
    return it->second;
  }

  static std::string Block(const std::string& expected, const std::string& got) {
    return "expected:\n" + expected + "got:\n" + got;
  }

  void DoExpect(const Step& s) {
    if (s.args.empty()) Fail("expect needs a subject");
    ExpectResult r;
    r.step = s.number;
    r.line = s.line;
    r.text = s.text;
    const std::string& subject = s.args[0];
    if (subject == "ledger" || subject == "events") {
      if (s.args.size() != 1) Fail("expect " + subject + " takes only a body");
      const std::string& want = Body();
      std::string got =
          subject == "ledger" ? Engine().Ledger().Report() : Engine().FormatEventLog();
      r.passed = got == want;
      if (!r.passed) r.detail = Block(want, got);
      result_.expects.push_back(std::move(r));
      return;
    }
    if (s.args.size() < 2) Fail("expect " + subject + " needs a property");
    const LabelRecord& rec = Label(subject);
    const std::string& prop = s.args[1];
    auto value = [&]() -> std::string {
      if (s.args.size() != 3) Fail("expect " + prop + " takes one value");
      return s.args[2];
    };
    auto compare = [&](const std::string& want, const std::string& got) {
      r.passed = want == got;
      if (!r.passed) r.detail = "got " + got;
    };
    auto job = [&]() -> Job {
      if (!rec.job) Fail("label '" + subject + "' has no job");
      return Engine().Record({*rec.job});
    };
    if (prop == "decision") {
      std::string got;
      if (rec.decision) {
        got = std::string(ToString(rec.decision->effect));
      } else {
        got = rec.outcome == "ok" ? "permit" : "none (" + rec.outcome + ")";
      }
      compare(value(), got);
    } else if (prop == "outcome") {
      compare(value(), rec.outcome);
    } else if (prop == "trace-contains") {
      std::string got = rec.decision ? Explain(*rec.decision) : "";
      r.passed = got.find(value()) != std::string::npos;
      if (!r.passed) r.detail = "trace:\n" + got;
    } else if (prop == "explain") {
      if (s.args.size() != 2) Fail("expect explain takes only a body");
      std::string got = rec.decision ? Explain(*rec.decision) : "";
      r.passed = got == Body();
      if (!r.passed) r.detail = Block(Body(), got);
    } else if (prop == "state") {
      compare(value(), std::string(ToString(job().state)));
    } else if (prop == "consumed") {
      compare(value(), std::to_string(job().consumed));
    } else if (prop == "reserved") {
      compare(value(), std::to_string(job().reserved));
    } else if (prop == "priority") {
      compare(value(), std::to_string(job().priority));
    } else if (prop == "job") {
      compare(value(), rec.job.value_or("none"));
    } else {
      Fail("unknown expectation '" + prop + "'");
    }
    result_.expects.push_back(std::move(r));
  }

  const Step* step_ = nullptr;
  EngineConfig config_;
  KeyRegistry registry_;
  std::unique_ptr<JobManager> engine_;
  std::map<std::string, PolicyDocument> policies_;
  std::map<std::string, GridCredential> creds_;
  std::map<std::string, CapabilityToken> caps_;
  std::map<std::string, LabelRecord> labels_;
  ScenarioResult result_;
};

}  // namespace

ScenarioResult RunScenario(std::string_view script) {
  return Runner().Run(ParseScript(script));
}

}  // namespace gridauthz::cli
