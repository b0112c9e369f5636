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

#ifndef GRIDAUTHZ_PDP_H_
#define GRIDAUTHZ_PDP_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridauthz/credential.h"
#include "gridauthz/policy.h"
#include "gridauthz/rsl.h"

namespace gridauthz {

// Policy decision point.
//
// Within one policy source the decision is permit-overrides: the source
// permits if any applicable block permits, and denies when no block
// applies. Across sources it is deny-overrides: the resource source is
// always consulted, the vo source whenever the credential names a VO, and
// every consulted source must permit. Management actions issued by the job
// owner are always permitted (trace source "builtin-owner").

struct AuthzQuery {
  GridCredential credential;
  JobAction action = JobAction::kStart;
  std::string target;                     // resource / service id
  std::optional<RslRequest> request;      // start only
  std::optional<std::string> jobtag;      // management only, from the job record
  std::optional<std::string> job_owner;   // management only, from the job record
};

enum class Effect { kPermit, kDeny };
std::string_view ToString(Effect effect);

struct TraceEntry {
  std::string source;                 // "resource", "vo", "builtin-owner", ...
  std::optional<std::size_t> block;   // absent for source-level entries
  Effect outcome = Effect::kDeny;
  std::optional<std::string> reason;  // first failed assertion, for denials

  bool operator==(const TraceEntry&) const = default;
};

struct Decision {
  Effect effect = Effect::kDeny;
  std::vector<TraceEntry> trace;
  std::optional<std::int64_t> charged_estimate;  // start only

  bool permitted() const { return effect == Effect::kPermit; }
  bool operator==(const Decision&) const = default;
};

struct PolicySourceSet {
  PolicyDocument resource;
  std::optional<PolicyDocument> vo;
};

class PdpError : public std::runtime_error {
 public:
  enum class Kind { kInvalidQuery, kNoApplicableBlocks };
  PdpError(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct AssertionOutcome {
  bool satisfied = true;
  std::string reason;  // set when violated
};

// MayContain is evaluated as a single-spec membership test; it is vacuously
// satisfied when the attribute is absent.
AssertionOutcome EvalAssertion(const Assertion& assertion, const RslRequest& request);

struct BlockDecision {
  Effect effect = Effect::kDeny;
  std::string reason;  // set on deny
};

BlockDecision EvalBlock(const SubjectBlock& block, const AuthzQuery& query);

// Throws PdpError(kInvalidQuery) when the query is malformed.
Decision Decide(const AuthzQuery& query, const PolicySourceSet& sources);

// Claims embedding `vo_doc` restricted to the blocks applicable to `cred`,
// the allocation clause, and the subject's own member quota.
CapabilityClaims DeriveCapability(const PolicyDocument& vo_doc, const GridCredential& cred,
                                  std::int64_t expiry);

// Push mode. Token problems and identity mismatches become denials.
Decision DecidePush(const AuthzQuery& query, const PolicyDocument& resource_doc,
                    const CapabilityToken& token, const KeyRegistry& registry,
                    std::int64_t now);

// One line per trace entry, e.g.
//   vo/block[0]: deny — closed-world rejects attribute 'queue'
//   builtin-owner: permit
std::string Explain(const Decision& decision);

// count x maxcputime, count defaulting to 1; nullopt without maxcputime or
// on overflow.
std::optional<std::int64_t> ChargeEstimate(const RslRequest& request);

}  // namespace gridauthz

#endif  // GRIDAUTHZ_PDP_H_
