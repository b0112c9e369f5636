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

#include "gridauthz/pdp.h"

#include <algorithm>

namespace gridauthz {

namespace {

constexpr char kSourceResource[] = "resource";
constexpr char kSourceVo[] = "vo";
constexpr char kSourceOwner[] = "builtin-owner";
constexpr char kSourceAccounting[] = "accounting";
constexpr char kSourceCapability[] = "capability";

std::string Why(const Assertion& a, const std::string& why) {
  return FormatAssertion(a) + ": " + why;
}

std::string MismatchWhy(SpecMatch m, const RslValue& value) {
  if (m == SpecMatch::kTypeMismatch) return "type mismatch for value " + FormatRslValue(value);
  return "value " + FormatRslValue(value) + " not allowed";
}

std::string QuotedTags(const std::set<std::string>& tags) {
  std::string out;
  for (const auto& t : tags) {
    if (!out.empty()) out += ", ";
    out += "'" + t + "'";
  }
  return out;
}

BlockDecision Deny(std::string reason) { return {Effect::kDeny, std::move(reason)}; }

BlockDecision EvalManagement(const SubjectBlock& block, const AuthzQuery& q) {
  auto grant = block.jobtag_grants.find(q.action);
  if (grant == block.jobtag_grants.end()) return {Effect::kPermit, {}};
  const std::string action(ToString(q.action));
  if (!q.jobtag) {
    return Deny("action '" + action + "' is granted only on jobtag " +
                QuotedTags(grant->second) + "; job is untagged");
  }
  if (grant->second.count(*q.jobtag) == 0) {
    return Deny("action '" + action + "' is not granted on jobtag '" + *q.jobtag + "'");
  }
  return {Effect::kPermit, {}};
}

BlockDecision EvalStart(const SubjectBlock& block, const RslRequest& request) {
  std::set<std::string> may_done;
  for (const auto& a : block.assertions) {
    if (a.kind != Assertion::Kind::kMayContain) {
      AssertionOutcome o = EvalAssertion(a, request);
      if (!o.satisfied) return Deny(o.reason);
      continue;
    }
    if (!may_done.insert(a.attr).second) continue;
    const RslValue* value = request.Find(a.attr);
    if (value == nullptr) continue;
    // MayContain specs on the same attribute union.
    bool any = false;
    for (const auto& other : block.assertions) {
      if (other.kind == Assertion::Kind::kMayContain && other.attr == a.attr &&
          MatchValueSpec(*other.spec, *value) == SpecMatch::kMatch) {
        any = true;
        break;
      }
    }
    if (!any) return Deny(Why(a, MismatchWhy(MatchValueSpec(*a.spec, *value), *value)));
  }
  if (block.closed_world) {
    std::set<std::string> allowed = block.AllowedNames();
    for (const auto& [name, value] : request.attributes()) {
      if (allowed.count(name) == 0) {
        return Deny("closed-world rejects attribute '" + name + "'");
      }
    }
  }
  return {Effect::kPermit, {}};
}

// Appends this source's trace entries and returns whether it permits.
bool EvalSource(const PolicyDocument& doc, const char* source, const AuthzQuery& q,
                std::vector<TraceEntry>& trace) {
  std::vector<std::size_t> applicable = ApplicableBlocks(doc, q.credential);
  if (applicable.empty()) {
    trace.push_back({source, std::nullopt, Effect::kDeny, "no applicable blocks"});
    return false;
  }
  bool permit = false;
  for (std::size_t index : applicable) {
    BlockDecision d = EvalBlock(doc.blocks[index], q);
    TraceEntry entry{source, index, d.effect, std::nullopt};
    if (d.effect == Effect::kDeny) entry.reason = d.reason;
    trace.push_back(std::move(entry));
    permit = permit || d.effect == Effect::kPermit;
  }
  return permit;
}

void CheckQuery(const AuthzQuery& q) {
  if (q.action == JobAction::kStart && !q.request) {
    throw PdpError(PdpError::Kind::kInvalidQuery, "start query requires a job request");
  }
  if (q.action != JobAction::kStart && q.request) {
    throw PdpError(PdpError::Kind::kInvalidQuery,
                   "management query must not carry a job request");
  }
  if (q.credential.subject.empty()) {
    throw PdpError(PdpError::Kind::kInvalidQuery, "query credential has no subject");
  }
}

bool IsOwnerManagement(const AuthzQuery& q) {
  return IsManagementAction(q.action) && q.job_owner && *q.job_owner == q.credential.subject;
}

Decision OwnerPermit() {
  Decision d;
  d.effect = Effect::kPermit;
  d.trace.push_back({kSourceOwner, std::nullopt, Effect::kPermit, std::nullopt});
  return d;
}

Decision SourceLevelDeny(const char* source, std::string reason) {
  Decision d;
  d.trace.push_back({source, std::nullopt, Effect::kDeny, std::move(reason)});
  return d;
}

}  // namespace

std::string_view ToString(Effect effect) {
  return effect == Effect::kPermit ? "permit" : "deny";
}

AssertionOutcome EvalAssertion(const Assertion& a, const RslRequest& request) {
  const RslValue* value = request.Find(a.attr);
  switch (a.kind) {
    case Assertion::Kind::kMustContain: {
      if (value == nullptr) return {false, Why(a, "attribute missing")};
      if (!a.spec) return {};
      SpecMatch m = MatchValueSpec(*a.spec, *value);
      if (m == SpecMatch::kMatch) return {};
      return {false, Why(a, MismatchWhy(m, *value))};
    }
    case Assertion::Kind::kMustNotContain: {
      if (value == nullptr) return {};
      if (!a.spec) return {false, Why(a, "attribute present")};
      SpecMatch m = MatchValueSpec(*a.spec, *value);
      if (m == SpecMatch::kNoMatch) return {};
      if (m == SpecMatch::kTypeMismatch) return {false, Why(a, MismatchWhy(m, *value))};
      return {false, Why(a, "value " + FormatRslValue(*value) + " is forbidden")};
    }
    case Assertion::Kind::kMayContain: {
      if (value == nullptr) return {};
      SpecMatch m = MatchValueSpec(*a.spec, *value);
      if (m == SpecMatch::kMatch) return {};
      return {false, Why(a, MismatchWhy(m, *value))};
    }
  }
  return {};
}

BlockDecision EvalBlock(const SubjectBlock& block, const AuthzQuery& q) {
  if (block.allowed_actions.count(q.action) == 0) {
    return Deny("action '" + std::string(ToString(q.action)) + "' not allowed");
  }
  if (IsManagementAction(q.action)) return EvalManagement(block, q);
  if (!q.request) return Deny("start query without a job request");
  return EvalStart(block, *q.request);
}

std::optional<std::int64_t> ChargeEstimate(const RslRequest& request) {
  const RslValue* cpu = request.Find("maxcputime");
  if (cpu == nullptr || !std::holds_alternative<std::int64_t>(*cpu)) return std::nullopt;
  std::int64_t count = 1;
  if (const RslValue* c = request.Find("count")) {
    if (!std::holds_alternative<std::int64_t>(*c)) return std::nullopt;
    count = std::get<std::int64_t>(*c);
  }
  std::int64_t charge = 0;
  if (__builtin_mul_overflow(count, std::get<std::int64_t>(*cpu), &charge)) {
    return std::nullopt;
  }
  return charge;
}

Decision Decide(const AuthzQuery& q, const PolicySourceSet& sources) {
  CheckQuery(q);
  if (IsOwnerManagement(q)) return OwnerPermit();

  Decision decision;
  bool permit = EvalSource(sources.resource, kSourceResource, q, decision.trace);
  const auto& trust = sources.resource.trust;
  if (q.credential.vo && !trust.empty() &&
      std::find(trust.begin(), trust.end(), *q.credential.vo) == trust.end()) {
    decision.trace.push_back({kSourceResource, std::nullopt, Effect::kDeny,
                              "vo '" + *q.credential.vo + "' is not trusted"});
    permit = false;
  }
  if (q.credential.vo) {
    if (!sources.vo) {
      decision.trace.push_back(
          {kSourceVo, std::nullopt, Effect::kDeny, "no vo policy supplied"});
      permit = false;
    } else {
      permit = EvalSource(*sources.vo, kSourceVo, q, decision.trace) && permit;
    }
  }
  if (q.action == JobAction::kStart) {
    decision.charged_estimate = ChargeEstimate(*q.request);
    bool accounting = q.credential.vo && sources.vo && sources.vo->allocation;
    if (accounting && !decision.charged_estimate) {
      std::string reason = q.request->Contains("maxcputime")
                               ? "charge-overflow"
                               : "accounting-requires-maxcputime";
      decision.trace.push_back({kSourceAccounting, std::nullopt, Effect::kDeny, reason});
      permit = false;
    }
  }
  decision.effect = permit ? Effect::kPermit : Effect::kDeny;
  return decision;
}

CapabilityClaims DeriveCapability(const PolicyDocument& vo_doc, const GridCredential& cred,
                                  std::int64_t expiry) {
  if (vo_doc.source != PolicySource::kVo) {
    throw PdpError(PdpError::Kind::kInvalidQuery, "capabilities derive from vo policies only");
  }
  if (!cred.vo) {
    throw PdpError(PdpError::Kind::kInvalidQuery, "credential is not a VO member");
  }
  PolicyDocument fragment;
  fragment.name = vo_doc.name;
  fragment.source = PolicySource::kVo;
  fragment.allocation = vo_doc.allocation;
  for (std::size_t index : ApplicableBlocks(vo_doc, cred)) {
    fragment.blocks.push_back(vo_doc.blocks[index]);
  }
  if (fragment.blocks.empty()) {
    throw PdpError(PdpError::Kind::kNoApplicableBlocks,
                   "no vo policy block applies to '" + cred.subject + "'");
  }
  if (auto quota = vo_doc.member_quotas.find(cred.subject);
      quota != vo_doc.member_quotas.end()) {
    fragment.member_quotas.insert(*quota);
  }
  CapabilityClaims claims;
  claims.subject = cred.subject;
  claims.vo = *cred.vo;
  claims.groups = cred.groups;
  claims.expiry = expiry;
  claims.policy_fragment = FormatPolicy(fragment);
  return claims;
}

Decision DecidePush(const AuthzQuery& q, const PolicyDocument& resource_doc,
                    const CapabilityToken& token, const KeyRegistry& registry,
                    std::int64_t now) {
  CheckQuery(q);
  if (IsOwnerManagement(q)) return OwnerPermit();

  CapabilityClaims claims;
  try {
    claims = VerifyCapability(registry, token, now);
  } catch (const CapabilityError& e) {
    return SourceLevelDeny(kSourceCapability, std::string(ToString(e.kind())));
  }
  if (claims.subject != q.credential.subject) {
    return SourceLevelDeny(kSourceCapability, "subject-mismatch");
  }
  if (q.credential.vo != claims.vo) return SourceLevelDeny(kSourceCapability, "vo-mismatch");

  PolicySourceSet sources{resource_doc, std::nullopt};
  try {
    sources.vo = ParsePolicy(claims.policy_fragment);
  } catch (const PolicyError& e) {
    return SourceLevelDeny(kSourceCapability, std::string("bad policy fragment: ") + e.what());
  }
  if (sources.vo->source != PolicySource::kVo) {
    return SourceLevelDeny(kSourceCapability, "bad policy fragment: source is not vo");
  }
  // Group membership comes from the VO-signed claims.
  AuthzQuery effective = q;
  effective.credential.groups = claims.groups;
  return Decide(effective, sources);
}

std::string Explain(const Decision& decision) {
  std::string out;
  for (const auto& e : decision.trace) {
    out += e.source;
    if (e.block) out += "/block[" + std::to_string(*e.block) + "]";
    out += ": ";
    out += ToString(e.outcome);
    if (e.reason) out += " — " + *e.reason;
    out += "\n";
  }
  return out;
}

}  // namespace gridauthz
