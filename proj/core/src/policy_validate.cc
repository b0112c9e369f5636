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

#include <algorithm>
#include <charconv>
#include <limits>

#include "gridauthz/policy.h"

namespace gridauthz {

namespace {

bool Covers(const SubjectMatcher& earlier, const SubjectMatcher& later) {
  return earlier.kind == SubjectMatcher::Kind::kAny || earlier == later;
}

// True when `earlier` permits every query that `later` permits.
bool Subsumes(const SubjectBlock& earlier, const SubjectBlock& later) {
  if (!earlier.assertions.empty() || earlier.closed_world) return false;
  for (JobAction a : later.allowed_actions) {
    if (earlier.allowed_actions.count(a) == 0) return false;
    auto grant = earlier.jobtag_grants.find(a);
    if (grant == earlier.jobtag_grants.end()) continue;
    auto theirs = later.jobtag_grants.find(a);
    if (theirs == later.jobtag_grants.end()) return false;
    if (!std::includes(grant->second.begin(), grant->second.end(), theirs->second.begin(),
                       theirs->second.end())) {
      return false;
    }
  }
  return true;
}

template <typename Pred>
bool AllScalars(const ValueSpec& spec, Pred pred) {
  if (spec.kind != ValueSpec::Kind::kOr) return pred(spec);
  return std::all_of(spec.alternatives.begin(), spec.alternatives.end(), pred);
}

bool IsFiniteEnum(const ValueSpec& s) {
  return s.kind == ValueSpec::Kind::kEnum &&
         std::none_of(s.values.begin(), s.values.end(),
                      [](const std::string& v) { return v.find('*') != std::string::npos; });
}

bool IsUniversal(const ValueSpec& spec) {
  auto universal = [](const ValueSpec& s) {
    return s.kind == ValueSpec::Kind::kEnum &&
           std::any_of(s.values.begin(), s.values.end(), [](const std::string& v) {
             return !v.empty() && v.find_first_not_of('*') == std::string::npos;
           });
  };
  if (spec.kind != ValueSpec::Kind::kOr) return universal(spec);
  return std::any_of(spec.alternatives.begin(), spec.alternatives.end(), universal);
}

std::optional<std::int64_t> AsInt(const std::string& s) {
  std::int64_t n = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return n;
}

void CollectStrings(const ValueSpec& spec, std::vector<std::string>& out) {
  if (spec.kind == ValueSpec::Kind::kOr) {
    for (const auto& alt : spec.alternatives) CollectStrings(alt, out);
  } else if (spec.kind == ValueSpec::Kind::kEnum) {
    out.insert(out.end(), spec.values.begin(), spec.values.end());
  }
}

void CollectCriticalPoints(const ValueSpec& spec, std::vector<std::int64_t>& out) {
  switch (spec.kind) {
    case ValueSpec::Kind::kOr:
      for (const auto& alt : spec.alternatives) CollectCriticalPoints(alt, out);
      break;
    case ValueSpec::Kind::kRange:
      out.push_back(spec.lo);
      out.push_back(spec.hi);
      break;
    case ValueSpec::Kind::kMax: out.push_back(spec.hi); break;
    case ValueSpec::Kind::kMin: out.push_back(spec.lo); break;
    case ValueSpec::Kind::kEnum:
      for (const auto& v : spec.values) {
        if (auto n = AsInt(v)) out.push_back(*n);
      }
      break;
    case ValueSpec::Kind::kRegex: break;
  }
}

// Constraints one block places on a single attribute of a start request.
struct AttrConstraints {
  std::vector<std::optional<ValueSpec>> must;
  std::vector<std::optional<ValueSpec>> must_not;
  std::vector<ValueSpec> may;

  bool Admits(const RslValue& v) const {
    for (const auto& s : must) {
      if (s && MatchValueSpec(*s, v) != SpecMatch::kMatch) return false;
    }
    for (const auto& s : must_not) {
      if (!s || MatchValueSpec(*s, v) != SpecMatch::kNoMatch) return false;
    }
    if (may.empty()) return true;
    return std::any_of(may.begin(), may.end(), [&](const ValueSpec& s) {
      return MatchValueSpec(s, v) == SpecMatch::kMatch;
    });
  }

  std::vector<const ValueSpec*> All() const {
    std::vector<const ValueSpec*> specs;
    for (const auto& s : must) if (s) specs.push_back(&*s);
    for (const auto& s : must_not) if (s) specs.push_back(&*s);
    for (const auto& s : may) specs.push_back(&s);
    return specs;
  }
};

// Builds a finite set of values that contains a witness whenever any value
// satisfies the constraints. nullopt when no such set is easy to find.
std::optional<std::vector<RslValue>> WitnessCandidates(const AttrConstraints& c) {
  std::vector<const ValueSpec*> positives;
  for (const auto& s : c.must) if (s) positives.push_back(&*s);
  ValueSpec may_union;
  if (!c.may.empty()) {
    may_union = ValueSpec::Or(std::vector<ValueSpec>(c.may.begin(), c.may.end()));
    positives.push_back(&may_union);
  }

  for (const ValueSpec* p : positives) {
    if (!AllScalars(*p, IsFiniteEnum)) continue;
    std::vector<std::string> strings;
    CollectStrings(*p, strings);
    std::vector<RslValue> out;
    for (const auto& s : strings) {
      out.emplace_back(s);
      if (auto n = AsInt(s)) out.emplace_back(*n);
    }
    return out;
  }

  bool numeric = std::any_of(positives.begin(), positives.end(), [](const ValueSpec* p) {
    return AllScalars(*p, [](const ValueSpec& s) { return s.IsNumeric(); });
  });
  if (!numeric) return std::nullopt;
  std::vector<std::int64_t> points{0, 1};
  for (const ValueSpec* s : c.All()) {
    bool decidable = AllScalars(*s, [](const ValueSpec& x) {
      return x.IsNumeric() || IsFiniteEnum(x);
    });
    if (!decidable) return std::nullopt;
    CollectCriticalPoints(*s, points);
  }
  constexpr auto kMin = std::numeric_limits<std::int64_t>::min();
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  std::vector<RslValue> out{kMin, kMax};
  for (std::int64_t p : points) {
    out.emplace_back(p);
    if (p != kMin) out.emplace_back(p - 1);
    if (p != kMax) out.emplace_back(p + 1);
  }
  return out;
}

std::optional<std::string> ProvablyUnsatisfiable(const SubjectBlock& block) {
  std::map<std::string, AttrConstraints> by_attr;
  for (const auto& a : block.assertions) {
    auto& c = by_attr[a.attr];
    switch (a.kind) {
      case Assertion::Kind::kMustContain: c.must.push_back(a.spec); break;
      case Assertion::Kind::kMustNotContain: c.must_not.push_back(a.spec); break;
      case Assertion::Kind::kMayContain: c.may.push_back(*a.spec); break;
    }
  }
  for (const auto& [attr, c] : by_attr) {
    if (c.must.empty()) continue;
    for (const auto& s : c.must_not) {
      if (!s || IsUniversal(*s)) {
        return "attribute '" + attr + "' is both required and forbidden";
      }
    }
    if (attr == "arguments") continue;
    auto candidates = WitnessCandidates(c);
    if (!candidates) continue;
    bool any = std::any_of(candidates->begin(), candidates->end(), [&](const RslValue& v) {
      if (IsPositiveIntAttr(attr)) {
        const auto* n = std::get_if<std::int64_t>(&v);
        if (n == nullptr || *n <= 0) return false;
      }
      return c.Admits(v);
    });
    if (!any) return "no value of '" + attr + "' satisfies the block's assertions";
  }
  return std::nullopt;
}

}  // namespace

std::string_view ToString(Diagnostic::Kind kind) {
  switch (kind) {
    case Diagnostic::Kind::kUnreachableBlock: return "unreachable-block";
    case Diagnostic::Kind::kAlwaysDeny: return "always-deny";
    case Diagnostic::Kind::kQuotaExceedsAllocation: return "quota-exceeds-allocation";
  }
  return "?";
}

std::vector<Diagnostic> ValidatePolicy(const PolicyDocument& doc) {
  std::vector<Diagnostic> out;
  for (std::size_t j = 0; j < doc.blocks.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (Covers(doc.blocks[i].matcher, doc.blocks[j].matcher) &&
          Subsumes(doc.blocks[i], doc.blocks[j])) {
        out.push_back({Diagnostic::Kind::kUnreachableBlock, j,
                       "unreachable: block[" + std::to_string(j) + "] is shadowed by block[" +
                           std::to_string(i) + "]"});
        break;
      }
    }
    const SubjectBlock& block = doc.blocks[j];
    if (block.allowed_actions.count(JobAction::kStart) == 0) continue;
    if (auto why = ProvablyUnsatisfiable(block)) {
      out.push_back({Diagnostic::Kind::kAlwaysDeny, j,
                     "always-deny: block[" + std::to_string(j) + "]: " + *why});
    }
  }
  if (doc.allocation) {
    for (const auto& [member, quota] : doc.member_quotas) {
      if (quota > *doc.allocation) {
        out.push_back({Diagnostic::Kind::kQuotaExceedsAllocation, std::nullopt,
                       "quota exceeds allocation: member '" + member + "' quota " +
                           std::to_string(quota) + " > allocation " +
                           std::to_string(*doc.allocation)});
      }
    }
  }
  return out;
}

}  // namespace gridauthz
