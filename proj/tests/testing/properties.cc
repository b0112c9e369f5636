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

#include "testing/properties.h"

#include <map>
#include <sstream>

#include "testing/bridge.h"

namespace oracle {
namespace {

using gridauthz::Decision;
using gridauthz::PolicyDocument;

// Blocks are compared by their printed form, since a capability fragment
// renumbers them.
std::multiset<std::string> BlockTexts(const PolicyDocument& doc,
                                      const std::set<std::size_t>& indices) {
  std::multiset<std::string> out;
  for (std::size_t i : indices) {
    PolicyDocument one;
    one.source = doc.source;
    one.blocks.push_back(doc.blocks.at(i));
    out.insert(gridauthz::FormatPolicy(one));
  }
  return out;
}

std::string Describe(const std::string& what, const Doc& res, const std::optional<Doc>& vo,
                     const Query& q) {
  std::ostringstream o;
  o << what << "\n--- resource\n" << RenderPolicy(res, "resource");
  if (vo) o << "--- vo\n" << RenderPolicy(*vo, "vo");
  o << "--- credential\n" << RenderCred(q.cred, kFarFuture);
  o << "--- action " << q.action;
  if (q.request) o << " " << RenderRsl(*q.request);
  if (q.jobtag) o << " jobtag=" << *q.jobtag;
  if (q.owner) o << " owner=" << *q.owner;
  o << "\n";
  return o.str();
}

void Fail(PropertyReport& r, const std::string& text) {
  if (r.mismatches++ == 0) r.first_failure = text;
}

}  // namespace

PropertyReport CheckPushPull(std::uint64_t seed, int cases) {
  Generator gen(seed);
  PropertyReport report;
  gridauthz::VoKey key;
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = static_cast<std::uint8_t>(seed + i * 31);
  const gridauthz::KeyRegistry registry{{"fusion", key}};
  const std::int64_t now = 1000;

  while (report.cases < cases) {
    gen.NewUniverse();
    Doc res = gen.RandomDoc(false);
    Doc vo = gen.RandomDoc(true);
    Cred cred = gen.RandomCred();
    cred.vo = "fusion";
    Query q = gen.RandomQuery(cred);

    PolicyDocument res_doc = ToLibrary(res);
    PolicyDocument vo_doc = ToLibrary(vo);
    gridauthz::AuthzQuery query = ToLibrary(q);
    if (gridauthz::ApplicableBlocks(vo_doc, query.credential).empty()) continue;
    ++report.cases;

    Decision pull = gridauthz::Decide(query, {res_doc, vo_doc});
    gridauthz::CapabilityToken token = gridauthz::SignCapability(
        key, gridauthz::DeriveCapability(vo_doc, query.credential, now + 3600));
    Decision push = gridauthz::DecidePush(query, res_doc, token, registry, now);
    PolicyDocument fragment = gridauthz::ParsePolicy(token.claims.policy_fragment);
    report.permits += pull.permitted();

    bool same = pull.effect == push.effect &&
                Permitting(pull, "resource") == Permitting(push, "resource") &&
                BlockTexts(vo_doc, Permitting(pull, "vo")) ==
                    BlockTexts(fragment, Permitting(push, "vo"));
    if (!same) {
      Fail(report, Describe("pull:\n" + gridauthz::Explain(pull) + "push:\n" +
                                gridauthz::Explain(push),
                            res, vo, q));
    }
  }
  return report;
}

PropertyReport CheckOracle(std::uint64_t seed, int cases) {
  Generator gen(seed);
  PropertyReport report;
  for (; report.cases < cases; ++report.cases) {
    gen.NewUniverse();
    Doc res = gen.RandomDoc(false);
    std::optional<Doc> vo;
    if (gen.rng()() % 5 != 0) vo = gen.RandomDoc(true);
    Query q = gen.RandomQuery(gen.RandomCred());

    Verdict expected = Decide(q, res, vo);
    gridauthz::PolicySourceSet sources{ToLibrary(res), std::nullopt};
    if (vo) sources.vo = ToLibrary(*vo);
    Decision got = gridauthz::Decide(ToLibrary(q), sources);
    report.permits += got.permitted();

    bool same = got.permitted() == expected.permit;
    if (same && !(q.action != "start" && q.owner && *q.owner == q.cred.subject)) {
      same = Permitting(got, "resource") == expected.permitting["resource"] &&
             Permitting(got, "vo") == expected.permitting["vo"];
    }
    if (!same) {
      Fail(report, Describe(std::string("oracle says ") + (expected.permit ? "permit" : "deny") +
                                ", library:\n" + gridauthz::Explain(got),
                            res, vo, q));
    }
  }
  return report;
}

}  // namespace oracle
