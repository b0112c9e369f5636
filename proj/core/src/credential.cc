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

#include "gridauthz/credential.h"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <charconv>
#include <vector>

#include "gridauthz/policy.h"

namespace gridauthz {

namespace {

constexpr std::string_view kBeginPolicy = "---BEGIN POLICY---";
constexpr std::string_view kEndPolicy = "---END POLICY---";

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) {
      lines.push_back(text);
      break;
    }
    lines.push_back(text.substr(0, nl));
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::optional<std::int64_t> ParseInt64(std::string_view s) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

bool IsCleanField(std::string_view s) {
  return !s.empty() && Trim(s) == s && s.find('\n') == std::string_view::npos;
}

std::set<std::string> ParseGroups(std::string_view value) {
  std::set<std::string> groups;
  if (value.empty()) return groups;
  for (;;) {
    auto comma = value.find(',');
    std::string_view item = Trim(value.substr(0, comma));
    if (item.empty()) {
      throw CredentialError(CredentialError::Kind::kFormat, "empty group name");
    }
    groups.emplace(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return groups;
}

std::string JoinGroups(const std::set<std::string>& groups) {
  std::string out;
  for (const auto& g : groups) {
    if (!out.empty()) out.push_back(',');
    out += g;
  }
  return out;
}

// Fields shared by credential files and capability claims.
struct IdentityFields {
  std::optional<std::string> subject;
  std::optional<std::string> vo;
  std::optional<std::set<std::string>> groups;
  std::optional<std::int64_t> expiry;

  void Set(std::string_view line) {
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw CredentialError(CredentialError::Kind::kFormat,
                            "expected 'key: value', got '" + std::string(line) + "'");
    }
    std::string_view key = Trim(line.substr(0, colon));
    std::string_view value = Trim(line.substr(colon + 1));
    auto duplicate = [&] {
      throw CredentialError(CredentialError::Kind::kFormat,
                            "duplicate field '" + std::string(key) + "'");
    };
    if (key == "subject") {
      if (subject) duplicate();
      subject = std::string(value);
    } else if (key == "vo") {
      if (vo) duplicate();
      vo = std::string(value);
    } else if (key == "groups") {
      if (groups) duplicate();
      groups = ParseGroups(value);
    } else if (key == "expiry") {
      if (expiry) duplicate();
      expiry = ParseInt64(value);
      if (!expiry) {
        throw CredentialError(CredentialError::Kind::kFormat,
                              "expiry must be an integer, got '" + std::string(value) + "'");
      }
    } else {
      throw CredentialError(CredentialError::Kind::kFormat,
                            "unknown field '" + std::string(key) + "'");
    }
  }

  void Require(const char* name, bool present) const {
    if (!present) {
      throw CredentialError(CredentialError::Kind::kMissingField,
                            std::string("missing field '") + name + "'");
    }
  }
};

MacTag ComputeMac(const VoKey& key, std::string_view message) {
  MacTag tag{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
       reinterpret_cast<const unsigned char*>(message.data()), message.size(),
       tag.data(), &len);
  return tag;
}

int HexDigit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

template <std::size_t N>
std::optional<std::array<std::uint8_t, N>> ParseHexArray(std::string_view hex,
                                                         bool lowercase_only) {
  if (hex.size() != 2 * N) return std::nullopt;
  std::array<std::uint8_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    char hi = hex[2 * i];
    char lo = hex[2 * i + 1];
    if (!lowercase_only) {
      if (hi >= 'A' && hi <= 'F') hi = static_cast<char>(hi - 'A' + 'a');
      if (lo >= 'A' && lo <= 'F') lo = static_cast<char>(lo - 'A' + 'a');
    }
    int h = HexDigit(hi);
    int l = HexDigit(lo);
    if (h < 0 || l < 0) return std::nullopt;
    out[i] = static_cast<std::uint8_t>(h * 16 + l);
  }
  return out;
}

void CheckClaims(const CapabilityClaims& claims) {
  auto invalid = [](const std::string& why) {
    throw CredentialError(CredentialError::Kind::kInvalidClaims, "invalid claims: " + why);
  };
  if (!IsCleanField(claims.subject)) invalid("bad subject");
  if (!IsCleanField(claims.vo)) invalid("bad vo");
  if (claims.expiry <= 0) invalid("expiry must be positive");
  for (const auto& g : claims.groups) {
    if (!IsCleanField(g) || g.find(',') != std::string::npos) invalid("bad group '" + g + "'");
  }
}

}  // namespace

void CheckCredential(const GridCredential& cred) {
  auto bad = [](const std::string& why) {
    throw CredentialError(CredentialError::Kind::kFormat, why);
  };
  if (!IsCleanField(cred.subject)) bad("subject must be a non-empty single line");
  if (cred.vo && !IsCleanField(*cred.vo)) bad("vo must be a non-empty single line");
  if (!cred.groups.empty() && !cred.vo) bad("groups require a vo");
  for (const auto& g : cred.groups) {
    if (!IsCleanField(g) || g.find(',') != std::string::npos) bad("bad group name '" + g + "'");
  }
  if (cred.expiry <= 0) bad("expiry must be positive");
}

GridCredential LoadCredential(std::string_view text) {
  IdentityFields fields;
  for (std::string_view line : SplitLines(text)) {
    std::string_view trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    fields.Set(trimmed);
  }
  fields.Require("subject", fields.subject.has_value());
  fields.Require("expiry", fields.expiry.has_value());
  GridCredential cred;
  cred.subject = *fields.subject;
  cred.vo = fields.vo;
  if (fields.groups) cred.groups = *fields.groups;
  cred.expiry = *fields.expiry;
  CheckCredential(cred);
  return cred;
}

std::string FormatCredential(const GridCredential& cred) {
  std::string out = "subject: " + cred.subject + "\n";
  if (cred.vo) out += "vo: " + *cred.vo + "\n";
  if (!cred.groups.empty()) out += "groups: " + JoinGroups(cred.groups) + "\n";
  out += "expiry: " + std::to_string(cred.expiry) + "\n";
  return out;
}

bool IsValidAccountName(std::string_view name) {
  if (name.empty()) return false;
  auto lower = [](char c) { return c >= 'a' && c <= 'z'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!lower(name.front()) && name.front() != '_') return false;
  for (char c : name) {
    if (!lower(c) && !digit(c) && c != '_' && c != '-') return false;
  }
  return true;
}

void GridMapFile::Add(std::string subject, std::string account) {
  if (subject.empty()) {
    throw CredentialError(CredentialError::Kind::kFormat, "grid-mapfile: empty DN");
  }
  if (!IsValidAccountName(account)) {
    throw CredentialError(CredentialError::Kind::kFormat,
                          "grid-mapfile: invalid account name '" + account + "'");
  }
  if (entries_.count(subject) != 0) {
    throw CredentialError(CredentialError::Kind::kFormat,
                          "grid-mapfile: duplicate DN '" + subject + "'");
  }
  entries_.emplace(std::move(subject), std::move(account));
}

GridMapFile GridMapFile::Parse(std::string_view text) {
  GridMapFile map;
  std::size_t line_no = 0;
  for (std::string_view line : SplitLines(text)) {
    ++line_no;
    std::string_view rest = Trim(line);
    if (rest.empty() || rest.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw CredentialError(CredentialError::Kind::kFormat,
                            "grid-mapfile line " + std::to_string(line_no) + ": " + why);
    };
    if (rest.front() != '"') fail("expected quoted DN");
    auto close = rest.find('"', 1);
    if (close == std::string_view::npos) fail("unterminated DN");
    std::string dn(rest.substr(1, close - 1));
    std::string_view account = Trim(rest.substr(close + 1));
    if (account.empty()) fail("missing account");
    if (close + 1 < rest.size() && rest[close + 1] != ' ' && rest[close + 1] != '\t') {
      fail("expected whitespace after DN");
    }
    map.Add(std::move(dn), std::string(account));
  }
  return map;
}

std::optional<LocalAccountRef> GridMapFile::Map(std::string_view subject) const {
  auto it = entries_.find(subject);
  if (it == entries_.end()) return std::nullopt;
  return LocalAccountRef{it->second};
}

std::string GridMapFile::Format() const {
  std::string out;
  for (const auto& [dn, account] : entries_) out += "\"" + dn + "\" " + account + "\n";
  return out;
}

std::string_view ToString(CapabilityError::Kind kind) {
  switch (kind) {
    case CapabilityError::Kind::kFormat: return "BadFormat";
    case CapabilityError::Kind::kUnknownIssuer: return "UnknownIssuer";
    case CapabilityError::Kind::kBadSignature: return "BadSignature";
    case CapabilityError::Kind::kExpired: return "Expired";
  }
  return "?";
}

std::string SerializeClaims(const CapabilityClaims& claims) {
  std::string out;
  out += "subject: " + claims.subject + "\n";
  out += "vo: " + claims.vo + "\n";
  out += "groups:";
  if (!claims.groups.empty()) out += " " + JoinGroups(claims.groups);
  out += "\n";
  out += "expiry: " + std::to_string(claims.expiry) + "\n";
  out += std::string(kBeginPolicy) + "\n";
  out += claims.policy_fragment;
  if (claims.policy_fragment.empty() || claims.policy_fragment.back() != '\n') out += "\n";
  out += std::string(kEndPolicy) + "\n";
  return out;
}

CapabilityToken SignCapability(const VoKey& vo_key, const CapabilityClaims& claims) {
  CheckClaims(claims);
  CapabilityToken token;
  token.claims = claims;
  try {
    PolicyDocument fragment = ParsePolicy(claims.policy_fragment);
    if (fragment.source != PolicySource::kVo) {
      throw CredentialError(CredentialError::Kind::kInvalidClaims,
                            "invalid claims: policy fragment must have source vo");
    }
    token.claims.policy_fragment = FormatPolicy(fragment);
  } catch (const PolicyError& e) {
    throw CredentialError(CredentialError::Kind::kInvalidClaims,
                          std::string("invalid claims: policy fragment: ") + e.what());
  }
  token.mac = ComputeMac(vo_key, SerializeClaims(token.claims));
  return token;
}

CapabilityClaims VerifyCapability(const KeyRegistry& registry,
                                  const CapabilityToken& token, std::int64_t now) {
  auto key = registry.find(token.issuer_vo());
  if (key == registry.end()) {
    throw CapabilityError(CapabilityError::Kind::kUnknownIssuer,
                          "unknown issuer '" + token.issuer_vo() + "'");
  }
  MacTag expected = ComputeMac(key->second, SerializeClaims(token.claims));
  if (CRYPTO_memcmp(expected.data(), token.mac.data(), expected.size()) != 0) {
    throw CapabilityError(CapabilityError::Kind::kBadSignature, "bad signature");
  }
  if (now >= token.claims.expiry) {
    throw CapabilityError(CapabilityError::Kind::kExpired,
                          "capability expired at " + std::to_string(token.claims.expiry));
  }
  return token.claims;
}

std::string FormatCapabilityToken(const CapabilityToken& token) {
  return SerializeClaims(token.claims) + "mac: " + ToHex(token.mac.data(), token.mac.size()) +
         "\n";
}

CapabilityToken ParseCapabilityToken(std::string_view text) {
  auto fail = [](const std::string& why) {
    throw CapabilityError(CapabilityError::Kind::kFormat, "malformed capability: " + why);
  };
  if (text.empty() || text.back() != '\n') fail("missing final newline");
  std::string_view body = text.substr(0, text.size() - 1);
  auto last_nl = body.rfind('\n');
  if (last_nl == std::string_view::npos) fail("missing mac line");
  std::string_view mac_line = body.substr(last_nl + 1);
  std::string_view prefix = text.substr(0, last_nl + 1);
  if (mac_line.substr(0, 5) != "mac: ") fail("missing mac line");
  auto mac = ParseHexArray<32>(mac_line.substr(5), /*lowercase_only=*/true);
  if (!mac) fail("mac must be 64 lowercase hex characters");

  auto begin = prefix.find(std::string(kBeginPolicy) + "\n");
  if (begin == std::string_view::npos) fail("missing policy fence");
  std::string_view header = prefix.substr(0, begin);
  std::string_view rest = prefix.substr(begin + kBeginPolicy.size() + 1);
  std::string end_fence = std::string(kEndPolicy) + "\n";
  if (rest.size() < end_fence.size() ||
      rest.substr(rest.size() - end_fence.size()) != end_fence) {
    fail("missing end of policy fence");
  }

  IdentityFields fields;
  try {
    for (std::string_view line : SplitLines(header)) fields.Set(line);
  } catch (const CredentialError& e) {
    fail(e.what());
  }
  if (!fields.subject || !fields.vo || !fields.groups || !fields.expiry) {
    fail("missing claim field");
  }
  CapabilityToken token;
  token.claims.subject = *fields.subject;
  token.claims.vo = *fields.vo;
  token.claims.groups = *fields.groups;
  token.claims.expiry = *fields.expiry;
  token.claims.policy_fragment = std::string(rest.substr(0, rest.size() - end_fence.size()));
  token.mac = *mac;
  if (SerializeClaims(token.claims) != prefix) fail("claims are not in canonical form");
  return token;
}

std::string ToHex(const std::uint8_t* data, std::size_t size) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xf]);
  }
  return out;
}

std::optional<VoKey> ParseVoKey(std::string_view hex) {
  return ParseHexArray<32>(Trim(hex), /*lowercase_only=*/false);
}

KeyRegistry ParseKeyRegistry(std::string_view text) {
  KeyRegistry registry;
  std::size_t line_no = 0;
  for (std::string_view line : SplitLines(text)) {
    ++line_no;
    std::string_view rest = Trim(line);
    if (rest.empty() || rest.front() == '#') continue;
    auto space = rest.find_first_of(" \t");
    auto fail = [&](const std::string& why) {
      throw CredentialError(CredentialError::Kind::kFormat,
                            "key registry line " + std::to_string(line_no) + ": " + why);
    };
    if (space == std::string_view::npos) fail("expected '<vo> <hex key>'");
    auto key = ParseVoKey(rest.substr(space + 1));
    if (!key) fail("key must be 64 hex characters");
    if (!registry.emplace(std::string(rest.substr(0, space)), *key).second) {
      fail("duplicate vo");
    }
  }
  return registry;
}

}  // namespace gridauthz
