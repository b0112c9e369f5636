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

#ifndef GRIDAUTHZ_POLICY_H_
#define GRIDAUTHZ_POLICY_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gridauthz/credential.h"
#include "gridauthz/rsl.h"

namespace gridauthz {

enum class PolicySource { kResource, kVo };
std::string_view ToString(PolicySource source);

// POSIX extended regular expression, matched against the whole value.
class CompiledRegex;

struct ValueSpec {
  enum class Kind { kEnum, kRange, kRegex, kMax, kMin, kOr };

  Kind kind = Kind::kEnum;
  std::set<std::string> values;   // kEnum; '*' matches any run of characters
  std::int64_t lo = 0;            // kRange, kMin
  std::int64_t hi = 0;            // kRange, kMax
  std::string pattern;            // kRegex
  std::shared_ptr<const CompiledRegex> regex;
  std::vector<ValueSpec> alternatives;  // kOr, never nested

  static ValueSpec Enum(std::set<std::string> values);
  static ValueSpec Range(std::int64_t lo, std::int64_t hi);
  static ValueSpec Regex(std::string pattern);
  static ValueSpec Max(std::int64_t hi);
  static ValueSpec Min(std::int64_t lo);
  // Nested alternatives are flattened.
  static ValueSpec Or(std::vector<ValueSpec> alternatives);

  bool IsNumeric() const {
    return kind == Kind::kRange || kind == Kind::kMax || kind == Kind::kMin;
  }

  // Compares the source form; compiled state is ignored.
  friend bool operator==(const ValueSpec& a, const ValueSpec& b);
};

enum class SpecMatch { kMatch, kNoMatch, kTypeMismatch };

// Int values are compared against Enum and Regex specs in decimal form.
// List values match when every element matches. Numeric specs against a
// non-Int value are a type mismatch. An Or is a type mismatch only when
// every alternative is.
SpecMatch MatchValueSpec(const ValueSpec& spec, const RslValue& value);

// Anchored '*' glob.
bool GlobMatch(std::string_view pattern, std::string_view text);

struct Assertion {
  enum class Kind { kMayContain, kMustContain, kMustNotContain };

  Kind kind = Kind::kMayContain;
  std::string attr;               // normalized RSL name
  std::optional<ValueSpec> spec;  // always present for kMayContain

  bool operator==(const Assertion&) const = default;
};

struct SubjectMatcher {
  enum class Kind { kIdentity, kGroup, kAny };

  Kind kind = Kind::kAny;
  std::string value;  // DN or group name

  static SubjectMatcher Identity(std::string dn) { return {Kind::kIdentity, std::move(dn)}; }
  static SubjectMatcher Group(std::string name) { return {Kind::kGroup, std::move(name)}; }
  static SubjectMatcher Any() { return {Kind::kAny, {}}; }

  bool Matches(const GridCredential& cred) const;
  bool operator==(const SubjectMatcher&) const = default;
};

struct SubjectBlock {
  SubjectMatcher matcher;
  std::set<JobAction> allowed_actions;
  // Absent key: the action applies to any jobtag. Never contains kStart.
  std::map<JobAction, std::set<std::string>> jobtag_grants;
  std::vector<Assertion> assertions;
  bool closed_world = false;

  // Attributes named by a MayContain or MustContain assertion.
  std::set<std::string> AllowedNames() const;

  bool operator==(const SubjectBlock&) const = default;
};

struct PolicyDocument {
  std::string name;
  PolicySource source = PolicySource::kResource;
  std::vector<SubjectBlock> blocks;
  std::vector<std::string> trust;                // resource only
  std::optional<std::int64_t> allocation;        // vo only, cpu-seconds
  std::map<std::string, std::int64_t> member_quotas;  // vo only

  bool operator==(const PolicyDocument&) const = default;
};

class PolicyError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kBadRegex, kBadRange, kMisplacedClause };

  PolicyError(Kind kind, int line, int column, const std::string& message);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

PolicyDocument ParsePolicy(std::string_view text);

// Pretty printer; ParsePolicy(FormatPolicy(d)) == d.
std::string FormatPolicy(const PolicyDocument& doc);
std::string FormatValueSpec(const ValueSpec& spec);
std::string FormatAssertion(const Assertion& assertion);
std::string FormatMatcher(const SubjectMatcher& matcher);

struct Diagnostic {
  enum class Kind { kUnreachableBlock, kAlwaysDeny, kQuotaExceedsAllocation };

  Kind kind;
  std::optional<std::size_t> block;
  std::string message;
};

std::string_view ToString(Diagnostic::Kind kind);

// Non-fatal lints. An always-deny diagnostic is only reported when the
// block provably admits no start request.
std::vector<Diagnostic> ValidatePolicy(const PolicyDocument& doc);

// Indices of the blocks whose matcher accepts `cred`, in document order.
std::vector<std::size_t> ApplicableBlocks(const PolicyDocument& doc,
                                          const GridCredential& cred);

}  // namespace gridauthz

#endif  // GRIDAUTHZ_POLICY_H_
