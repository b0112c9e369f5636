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

#include "gridauthz/policy.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "testing/bridge.h"
#include "testing/oracle.h"

namespace gridauthz {
namespace {

PolicyError::Kind ParseError(std::string_view text) {
  try {
    ParsePolicy(text);
  } catch (const PolicyError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted: " << text;
  return PolicyError::Kind::kSyntax;
}

bool HasDiagnostic(const std::vector<Diagnostic>& ds, Diagnostic::Kind kind) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.kind == kind; });
}

TEST(ParsePolicy, SingleRangeBlock) {
  PolicyDocument d = ParsePolicy(
      R"(policy "p" source vo { subject group "analysts" { allow action start; attr count range 1..512; } })");
  EXPECT_EQ(d.name, "p");
  EXPECT_EQ(d.source, PolicySource::kVo);
  ASSERT_EQ(d.blocks.size(), 1u);
  const SubjectBlock& b = d.blocks[0];
  EXPECT_EQ(b.matcher, SubjectMatcher::Group("analysts"));
  EXPECT_EQ(b.allowed_actions, std::set<JobAction>{JobAction::kStart});
  ASSERT_EQ(b.assertions.size(), 1u);
  EXPECT_EQ(b.assertions[0].kind, Assertion::Kind::kMayContain);
  EXPECT_EQ(b.assertions[0].attr, "count");
  EXPECT_EQ(*b.assertions[0].spec, ValueSpec::Range(1, 512));
}

TEST(ParsePolicy, RequireWithoutSpec) {
  PolicyDocument d = ParsePolicy(
      "policy \"p\" source vo {\n subject any {\n require attr jobtag;\n }\n}\n");
  const Assertion& a = d.blocks[0].assertions[0];
  EXPECT_EQ(a.kind, Assertion::Kind::kMustContain);
  EXPECT_EQ(a.attr, "jobtag");
  EXPECT_FALSE(a.spec.has_value());
}

TEST(ParsePolicy, BadRange) {
  EXPECT_EQ(ParseError("policy \"p\" source vo { subject any { attr count range 5..2; } }"),
            PolicyError::Kind::kBadRange);
}

TEST(ParsePolicy, BadRegex) {
  EXPECT_EQ(ParseError("policy \"p\" source vo { subject any { attr q matches \"(a\"; } }"),
            PolicyError::Kind::kBadRegex);
}

TEST(ParsePolicy, MisplacedClauses) {
  EXPECT_EQ(ParseError("policy \"p\" source resource { allocation 5 cpu-seconds; }"),
            PolicyError::Kind::kMisplacedClause);
  EXPECT_EQ(ParseError("policy \"p\" source resource { member-quota \"/x\" 5 cpu-seconds; }"),
            PolicyError::Kind::kMisplacedClause);
  EXPECT_EQ(ParseError("policy \"p\" source vo { trust vo \"fusion\"; }"),
            PolicyError::Kind::kMisplacedClause);
  EXPECT_EQ(ParseError("policy \"p\" source vo { subject any { allow action start on jobtag "
                       "\"t\"; } }"),
            PolicyError::Kind::kMisplacedClause);
}

TEST(ParsePolicy, SyntaxErrorPosition) {
  try {
    ParsePolicy("policy \"p\" source vo {\n  subject any {\n    allow action fly;\n  }\n}\n");
    FAIL();
  } catch (const PolicyError& e) {
    EXPECT_EQ(e.kind(), PolicyError::Kind::kSyntax);
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 18);
  }
}

TEST(ParsePolicy, SyntaxErrors) {
  for (const char* text :
       {"", "policy", "policy \"p\" source grid { }", "policy \"p\" source vo {",
        "policy \"p\" source vo { subject any { attr count; } }",
        "policy \"p\" source vo { subject any { attr count in {}; } }",
        "policy \"p\" source vo { subject any { closed-world } }",
        "policy \"p\" source vo { } trailing"}) {
    EXPECT_EQ(ParseError(text), PolicyError::Kind::kSyntax) << text;
  }
}

TEST(ParsePolicy, JobtagGrantsAndClauses) {
  PolicyDocument d = ParsePolicy(R"(
    # scenario 3 style VO policy
    policy "fusion" source vo {
      allocation 1000 cpu-seconds;
      member-quota "/O=Grid/CN=alice" 600 cpu-seconds;
      subject identity "/O=Grid/CN=carol" {
        allow action suspend, cancel on jobtag "fusion-prod";
        allow action status;
      }
    })");
  EXPECT_EQ(d.allocation, 1000);
  EXPECT_EQ(d.member_quotas.at("/O=Grid/CN=alice"), 600);
  const SubjectBlock& b = d.blocks[0];
  EXPECT_EQ(b.allowed_actions,
            (std::set<JobAction>{JobAction::kSuspend, JobAction::kCancel, JobAction::kStatus}));
  EXPECT_EQ(b.jobtag_grants.at(JobAction::kSuspend), std::set<std::string>{"fusion-prod"});
  EXPECT_EQ(b.jobtag_grants.count(JobAction::kStatus), 0u);
}

TEST(ParsePolicy, OrSpecs) {
  PolicyDocument d = ParsePolicy(
      "policy \"p\" source resource { subject any { attr count max 4 or in {\"8\"} or min 100; } }");
  const ValueSpec& s = *d.blocks[0].assertions[0].spec;
  ASSERT_EQ(s.kind, ValueSpec::Kind::kOr);
  EXPECT_EQ(s.alternatives.size(), 3u);
  EXPECT_EQ(MatchValueSpec(s, std::int64_t{8}), SpecMatch::kMatch);
  EXPECT_EQ(MatchValueSpec(s, std::int64_t{50}), SpecMatch::kNoMatch);
}

TEST(ValueSpecs, Matching) {
  EXPECT_EQ(MatchValueSpec(ValueSpec::Enum({"/opt/vo/dbg/*"}), std::string("/opt/vo/dbg/gdb")),
            SpecMatch::kMatch);
  EXPECT_EQ(MatchValueSpec(ValueSpec::Enum({"/opt/vo/dbg/*"}), std::string("/opt/vo/dbgx")),
            SpecMatch::kNoMatch);
  EXPECT_EQ(MatchValueSpec(ValueSpec::Max(600), std::string("600")), SpecMatch::kTypeMismatch);
  EXPECT_EQ(MatchValueSpec(ValueSpec::Max(600), std::int64_t{600}), SpecMatch::kMatch);
  EXPECT_EQ(MatchValueSpec(ValueSpec::Regex("g[a-z]+"), std::string("gold")), SpecMatch::kMatch);
  EXPECT_EQ(MatchValueSpec(ValueSpec::Regex("g[a-z]+"), std::string("agold")),
            SpecMatch::kNoMatch);
  EXPECT_EQ(MatchValueSpec(ValueSpec::Enum({"4"}), std::int64_t{4}), SpecMatch::kMatch);
  EXPECT_EQ(MatchValueSpec(ValueSpec::Enum({"a*"}), RslList{"ab", "ac"}), SpecMatch::kMatch);
  EXPECT_EQ(MatchValueSpec(ValueSpec::Enum({"a*"}), RslList{"ab", "b"}), SpecMatch::kNoMatch);
  EXPECT_THROW(ValueSpec::Enum({}), PolicyError);
}

TEST(ValueSpecs, Glob) {
  EXPECT_TRUE(GlobMatch("*", ""));
  EXPECT_TRUE(GlobMatch("a*b*c", "axxbyyc"));
  EXPECT_FALSE(GlobMatch("a*b", "ab c"));
  EXPECT_TRUE(GlobMatch("a.b", "a.b"));
  EXPECT_FALSE(GlobMatch("a.b", "axb"));
}

constexpr char kScenario2Vo[] = R"(policy "fusion" source vo {
  subject group "developers" {
    allow action start;
    attr executable in {"/opt/vo/dbg/*"};
    attr maxcputime max 600;
    require attr jobtag;
    closed-world;
  }
  subject group "analysts" {
    allow action start;
    attr executable in {"/opt/vo/apps/transp"};
    attr count range 1..512;
  }
})";

TEST(ApplicableBlocks, ByGroup) {
  PolicyDocument d = ParsePolicy(kScenario2Vo);
  GridCredential analyst{"/O=Grid/CN=alice", "fusion", {"analysts"}, 10};
  EXPECT_EQ(ApplicableBlocks(d, analyst), std::vector<std::size_t>{1});
  GridCredential novo{"/O=Grid/CN=alice", std::nullopt, {}, 10};
  EXPECT_TRUE(ApplicableBlocks(d, novo).empty());
}

TEST(ApplicableBlocks, AnyAndIdentity) {
  PolicyDocument d = ParsePolicy(
      "policy \"r\" source resource { subject identity \"/x\" { } subject any { } }");
  GridCredential x{"/x", std::nullopt, {}, 1};
  GridCredential y{"/y", std::nullopt, {}, 1};
  EXPECT_EQ(ApplicableBlocks(d, x), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(ApplicableBlocks(d, y), std::vector<std::size_t>{1});
}

TEST(ValidatePolicy, AlwaysDenyRequireAndForbid) {
  PolicyDocument d = ParsePolicy(
      "policy \"p\" source vo { subject any { allow action start; require attr jobtag; forbid "
      "attr jobtag; } }");
  std::vector<Diagnostic> ds = ValidatePolicy(d);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].kind, Diagnostic::Kind::kAlwaysDeny);
  EXPECT_EQ(ds[0].block, 0u);
  EXPECT_EQ(ToString(ds[0].kind), "always-deny");

  // Brute force over every request on {jobtag, queue} with four values each.
  oracle::Block b;
  b.actions = {"start"};
  b.asserts = {{oracle::Assert::Kind::kMust, "jobtag", std::nullopt},
               {oracle::Assert::Kind::kMustNot, "jobtag", std::nullopt}};
  int permitted = 0;
  auto jobtags = oracle::ValueDomain("jobtag");
  auto queues = oracle::ValueDomain("queue");
  for (int i = 0; i <= 4; ++i) {
    for (int j = 0; j <= 4; ++j) {
      oracle::Query q;
      q.action = "start";
      q.request.emplace();
      if (i < 4) (*q.request)["jobtag"] = jobtags[i];
      if (j < 4) (*q.request)["queue"] = queues[j];
      permitted += oracle::BlockPermits(b, q);
    }
  }
  EXPECT_EQ(permitted, 0);
}

TEST(ValidatePolicy, QuotaExceedsAllocation) {
  PolicyDocument d = ParsePolicy(
      "policy \"p\" source vo { allocation 1000 cpu-seconds; member-quota \"/a\" 2000 "
      "cpu-seconds; }");
  std::vector<Diagnostic> ds = ValidatePolicy(d);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].kind, Diagnostic::Kind::kQuotaExceedsAllocation);
  EXPECT_EQ(ds[0].message.rfind("quota exceeds allocation", 0), 0u);
}

TEST(ValidatePolicy, CleanDocument) {
  EXPECT_TRUE(ValidatePolicy(ParsePolicy(kScenario2Vo)).empty());
}

TEST(ValidatePolicy, UnreachableBlock) {
  PolicyDocument d = ParsePolicy(
      "policy \"r\" source resource { subject any { allow action start, status; } subject group "
      "\"g\" { allow action start; attr count max 4; } }");
  std::vector<Diagnostic> ds = ValidatePolicy(d);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].kind, Diagnostic::Kind::kUnreachableBlock);
  EXPECT_EQ(ds[0].block, 1u);
}

TEST(ValidatePolicy, NumericContradiction) {
  PolicyDocument d = ParsePolicy(
      "policy \"r\" source resource { subject any { allow action start; require attr count max "
      "4; forbid attr count range 1..10; } }");
  EXPECT_TRUE(HasDiagnostic(ValidatePolicy(d), Diagnostic::Kind::kAlwaysDeny));
  PolicyDocument ok = ParsePolicy(
      "policy \"r\" source resource { subject any { allow action start; require attr count max "
      "4; forbid attr count range 2..10; } }");
  EXPECT_FALSE(HasDiagnostic(ValidatePolicy(ok), Diagnostic::Kind::kAlwaysDeny));
}

// --- properties -------------------------------------------------------------

TEST(PolicyProperty, PrintParseRoundTrip) {
  oracle::Generator gen(101);
  for (int i = 0; i < 2000; ++i) {
    gen.NewUniverse();
    oracle::Doc doc = gen.RandomDoc(i % 2 == 0);
    PolicyDocument parsed = oracle::ToLibrary(doc);
    std::string printed = FormatPolicy(parsed);
    PolicyDocument again = ParsePolicy(printed);
    ASSERT_EQ(again, parsed) << printed;
    ASSERT_EQ(FormatPolicy(again), printed);
  }
}

TEST(PolicyProperty, MatcherMonotonicity) {
  oracle::Generator gen(102);
  const std::vector<std::string> groups = {"analysts", "developers", "admins", "other"};
  for (int i = 0; i < 2000; ++i) {
    gen.NewUniverse();
    PolicyDocument doc = oracle::ToLibrary(gen.RandomDoc(true));
    oracle::Cred c = gen.RandomCred();
    c.vo = "fusion";
    GridCredential cred = LoadCredential(oracle::RenderCred(c, 10));
    std::vector<std::size_t> before = ApplicableBlocks(doc, cred);
    cred.groups.insert(groups[gen.rng()() % groups.size()]);
    std::vector<std::size_t> after = ApplicableBlocks(doc, cred);
    ASSERT_TRUE(std::includes(after.begin(), after.end(), before.begin(), before.end()));
  }
}

// Every always-deny diagnostic must be confirmed by exhaustive enumeration
// over the generator's attribute universe.
TEST(PolicyProperty, AlwaysDenyIsSound) {
  oracle::Generator gen(103);
  int flagged = 0;
  for (int i = 0; i < 4000; ++i) {
    gen.NewUniverse();
    oracle::Doc doc = gen.RandomDoc(false);
    std::vector<Diagnostic> ds = ValidatePolicy(oracle::ToLibrary(doc));
    for (const Diagnostic& d : ds) {
      if (d.kind != Diagnostic::Kind::kAlwaysDeny) continue;
      ++flagged;
      const oracle::Block& block = doc.blocks.at(*d.block);
      const auto& attrs = gen.universe();
      std::vector<std::size_t> idx(attrs.size(), 0);
      bool any_permit = false;
      while (true) {
        oracle::Query q;
        q.action = "start";
        q.request.emplace();
        for (std::size_t k = 0; k < attrs.size(); ++k) {
          if (idx[k] < 4) (*q.request)[attrs[k]] = oracle::ValueDomain(attrs[k])[idx[k]];
        }
        if (!q.request->empty() && oracle::BlockPermits(block, q)) any_permit = true;
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == 5) idx[k++] = 0;
        if (k == idx.size()) break;
      }
      ASSERT_FALSE(any_permit) << d.message << "\n" << oracle::RenderPolicy(doc, "p");
    }
  }
  EXPECT_GT(flagged, 0);
}

}  // namespace
}  // namespace gridauthz
