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

#ifndef GRIDAUTHZ_RSL_H_
#define GRIDAUTHZ_RSL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gridauthz {

// Job description language: a single `&`-conjunction of `(name=value)`
// clauses. Grammar:
//
//   request  := '&' clause+
//   clause   := '(' NAME '=' value ')'
//   value    := INT | STRING | STRING (' ' STRING)+   (lists: `arguments` only)
//
// Attribute names are case-insensitive and normalized to lowercase.

enum class JobAction { kStart, kCancel, kStatus, kSuspend, kResume, kSetPriority };

inline constexpr JobAction kAllJobActions[] = {
    JobAction::kStart,   JobAction::kCancel, JobAction::kStatus,
    JobAction::kSuspend, JobAction::kResume, JobAction::kSetPriority};

std::string_view ToString(JobAction action);
std::optional<JobAction> ParseJobAction(std::string_view text);
inline bool IsManagementAction(JobAction a) { return a != JobAction::kStart; }

using RslList = std::vector<std::string>;
using RslValue = std::variant<std::string, std::int64_t, RslList>;

// Renders a value in canonical RSL text (strings quoted and escaped).
std::string FormatRslValue(const RslValue& value);
std::string QuoteRslString(std::string_view s);

class RslRequest {
 public:
  using Attribute = std::pair<std::string, RslValue>;

  RslRequest() = default;

  // Adds an attribute after normalizing and validating the name; throws
  // RslError on a duplicate or malformed name, or a value of the wrong
  // type for a well-known attribute.
  void Add(std::string_view name, RslValue value);

  // Lookup is case-insensitive.
  const RslValue* Find(std::string_view name) const;
  bool Contains(std::string_view name) const { return Find(name) != nullptr; }

  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::size_t size() const { return attributes_.size(); }
  bool empty() const { return attributes_.empty(); }

  // Order-insensitive: a request is a map from name to value.
  friend bool operator==(const RslRequest& a, const RslRequest& b);

 private:
  std::vector<Attribute> attributes_;  // source order
};

class RslError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kDuplicateAttribute, kEmptyRequest, kInvalidValue };

  RslError(Kind kind, std::size_t position, std::string message);

  Kind kind() const { return kind_; }
  // Byte offset into the input; 0 when not tied to a position.
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

RslRequest ParseRsl(std::string_view text);

// Canonical form: names ascending, strings quoted.
std::string SerializeRsl(const RslRequest& request);

std::optional<RslValue> GetAttr(const RslRequest& request, std::string_view name);

// Lowercases `name` and checks it against [a-z_][a-z0-9_]*. Returns nullopt
// when the name is not a valid attribute name.
std::optional<std::string> NormalizeAttrName(std::string_view name);

// Integer attributes that must be positive: count, maxmemory, maxcputime.
bool IsPositiveIntAttr(std::string_view normalized_name);

}  // namespace gridauthz

#endif  // GRIDAUTHZ_RSL_H_
