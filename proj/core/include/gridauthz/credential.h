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

#ifndef GRIDAUTHZ_CREDENTIAL_H_
#define GRIDAUTHZ_CREDENTIAL_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridauthz {

// Simulated grid identity. Credentials are trusted local files; only
// capability tokens carry a cryptographic tag.
struct GridCredential {
  std::string subject;            // distinguished name
  std::optional<std::string> vo;
  std::set<std::string> groups;   // empty unless vo is set
  std::int64_t expiry = 0;        // unix seconds

  bool operator==(const GridCredential&) const = default;
};

class CredentialError : public std::runtime_error {
 public:
  enum class Kind { kFormat, kMissingField, kInvalidClaims };
  CredentialError(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Parses the `.cred` line format:
//   subject: <DN>
//   vo: <name>
//   groups: <comma-separated>
//   expiry: <unix-seconds>
// Blank lines and lines starting with '#' are ignored.
GridCredential LoadCredential(std::string_view text);
std::string FormatCredential(const GridCredential& cred);

// Throws CredentialError(kFormat) if an invariant does not hold.
void CheckCredential(const GridCredential& cred);

struct LocalAccountRef {
  std::string name;
  bool operator==(const LocalAccountRef&) const = default;
};

// grid-mapfile: `"<DN>" <account>` per line, '#' comments.
class GridMapFile {
 public:
  GridMapFile() = default;

  static GridMapFile Parse(std::string_view text);

  // Throws CredentialError(kFormat) on a bad account name or duplicate DN.
  void Add(std::string subject, std::string account);

  // nullopt means "not mapped", which routes the job to a dynamic account.
  std::optional<LocalAccountRef> Map(std::string_view subject) const;

  const std::map<std::string, std::string, std::less<>>& entries() const {
    return entries_;
  }
  std::string Format() const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

inline std::optional<LocalAccountRef> MapIdentity(const GridMapFile& map,
                                                  std::string_view subject) {
  return map.Map(subject);
}

bool IsValidAccountName(std::string_view name);

// ---------------------------------------------------------------------------
// Push-mode capability tokens.

using VoKey = std::array<std::uint8_t, 32>;
using MacTag = std::array<std::uint8_t, 32>;
using KeyRegistry = std::map<std::string, VoKey, std::less<>>;

struct CapabilityClaims {
  std::string subject;
  std::string vo;
  std::set<std::string> groups;
  std::int64_t expiry = 0;
  std::string policy_fragment;  // pretty-printed vo PolicyDocument

  bool operator==(const CapabilityClaims&) const = default;
};

// The issuer is always the VO named in the claims.
struct CapabilityToken {
  CapabilityClaims claims;
  MacTag mac{};

  const std::string& issuer_vo() const { return claims.vo; }
  bool operator==(const CapabilityToken&) const = default;
};

class CapabilityError : public std::runtime_error {
 public:
  enum class Kind { kFormat, kUnknownIssuer, kBadSignature, kExpired };
  CapabilityError(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view ToString(CapabilityError::Kind kind);

// Canonical claim serialization; the MAC input.
std::string SerializeClaims(const CapabilityClaims& claims);

// Throws CredentialError(kInvalidClaims) if the claims are malformed or the
// policy fragment is not a valid vo policy document.
CapabilityToken SignCapability(const VoKey& vo_key, const CapabilityClaims& claims);

CapabilityClaims VerifyCapability(const KeyRegistry& registry,
                                  const CapabilityToken& token, std::int64_t now);

// `.cap` file: canonical claims followed by `mac: <64 lowercase hex>`.
// Parsing is strict: any non-canonical byte is a kFormat error.
std::string FormatCapabilityToken(const CapabilityToken& token);
CapabilityToken ParseCapabilityToken(std::string_view text);

std::string ToHex(const std::uint8_t* data, std::size_t size);
std::optional<VoKey> ParseVoKey(std::string_view hex);

// `<vo> <64 hex>` per line, '#' comments.
KeyRegistry ParseKeyRegistry(std::string_view text);

}  // namespace gridauthz

#endif  // GRIDAUTHZ_CREDENTIAL_H_
