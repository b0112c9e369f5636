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

#include "gridauthz/rsl.h"

#include <algorithm>
#include <charconv>

namespace gridauthz {

namespace {

constexpr std::string_view kActionNames[] = {"start",   "cancel", "status",
                                             "suspend", "resume", "set_priority"};

constexpr std::string_view kTextAttrs[] = {"executable", "queue",  "jobtag",
                                           "directory",  "stdout", "stderr"};

bool IsNameStart(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool IsNameChar(char c) { return IsNameStart(c) || (c >= '0' && c <= '9'); }
bool IsDigit(char c) { return c >= '0' && c <= '9'; }
bool IsSpace(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Checks (and for `arguments`, coerces) the value of a well-known attribute.
RslValue CheckWellKnown(const std::string& name, RslValue value, std::size_t pos) {
  if (name == "arguments") {
    if (auto* s = std::get_if<std::string>(&value)) return RslList{std::move(*s)};
    if (std::holds_alternative<RslList>(value)) return value;
    throw RslError(RslError::Kind::kInvalidValue, pos,
                   "attribute 'arguments' must be a list of strings");
  }
  if (std::holds_alternative<RslList>(value)) {
    throw RslError(RslError::Kind::kInvalidValue, pos,
                   "only 'arguments' may hold a list, not '" + name + "'");
  }
  if (IsPositiveIntAttr(name)) {
    const auto* n = std::get_if<std::int64_t>(&value);
    if (n == nullptr || *n <= 0) {
      throw RslError(RslError::Kind::kInvalidValue, pos,
                     "attribute '" + name + "' must be a positive integer");
    }
  }
  if (std::find(std::begin(kTextAttrs), std::end(kTextAttrs), name) !=
          std::end(kTextAttrs) &&
      !std::holds_alternative<std::string>(value)) {
    throw RslError(RslError::Kind::kInvalidValue, pos,
                   "attribute '" + name + "' must be a string");
  }
  return value;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  RslRequest Parse() {
    SkipSpace();
    if (AtEnd()) throw RslError(RslError::Kind::kEmptyRequest, 0, "empty request");
    Expect('&');
    RslRequest request;
    SkipSpace();
    if (AtEnd()) Fail("'('");
    while (!AtEnd()) {
      ParseClause(request);
      SkipSpace();
    }
    return request;
  }

 private:
  void ParseClause(RslRequest& request) {
    Expect('(');
    SkipSpace();
    const std::size_t name_pos = pos_;
    if (AtEnd() || !IsNameStart(Peek())) Fail("attribute name");
    while (!AtEnd() && IsNameChar(Peek())) ++pos_;
    std::string name = *NormalizeAttrName(text_.substr(name_pos, pos_ - name_pos));
    SkipSpace();
    Expect('=');
    SkipSpace();
    RslValue value = ParseValue();
    SkipSpace();
    Expect(')');
    if (request.Contains(name)) {
      throw RslError(RslError::Kind::kDuplicateAttribute, name_pos,
                     "duplicate attribute '" + name + "'");
    }
    request.Add(name, CheckWellKnown(name, std::move(value), name_pos));
  }

  RslValue ParseValue() {
    if (AtEnd()) Fail("value");
    if (Peek() == '"') {
      RslList strings;
      strings.push_back(ParseString());
      for (;;) {
        SkipSpace();
        if (AtEnd() || Peek() != '"') break;
        strings.push_back(ParseString());
      }
      if (strings.size() == 1) return std::move(strings.front());
      return strings;
    }
    if (Peek() == '-' || IsDigit(Peek())) return ParseInt();
    Fail("integer or quoted string");
  }

  std::int64_t ParseInt() {
    const std::size_t start = pos_;
    if (Peek() == '-') ++pos_;
    if (AtEnd() || !IsDigit(Peek())) Fail("digit");
    while (!AtEnd() && IsDigit(Peek())) ++pos_;
    std::int64_t value = 0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw RslError(RslError::Kind::kSyntax, start, "integer out of range");
    }
    return value;
  }

  std::string ParseString() {
    const std::size_t start = pos_;
    ++pos_;  // opening quote
    std::string out;
    for (;;) {
      if (AtEnd()) {
        throw RslError(RslError::Kind::kSyntax, start, "unterminated string");
      }
      char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (AtEnd() || (Peek() != '"' && Peek() != '\\')) {
          throw RslError(RslError::Kind::kSyntax, pos_ - 1,
                         "invalid escape; expected '\\\"' or '\\\\'");
        }
        c = text_[pos_++];
      }
      out.push_back(c);
    }
  }

  void Expect(char c) {
    if (AtEnd() || Peek() != c) Fail(std::string("'") + c + "'");
    ++pos_;
  }

  [[noreturn]] void Fail(const std::string& expected) {
    std::string found = AtEnd() ? "end of input" : "'" + std::string(1, Peek()) + "'";
    throw RslError(RslError::Kind::kSyntax, pos_,
                   "expected " + expected + " at offset " + std::to_string(pos_) +
                       ", found " + found);
  }

  void SkipSpace() {
    while (!AtEnd() && IsSpace(Peek())) ++pos_;
  }
  bool AtEnd() const { return pos_ >= text_.size(); }
  char Peek() const { return text_[pos_]; }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view ToString(JobAction action) {
  return kActionNames[static_cast<std::size_t>(action)];
}

std::optional<JobAction> ParseJobAction(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kActionNames); ++i) {
    if (kActionNames[i] == text) return static_cast<JobAction>(i);
  }
  return std::nullopt;
}

std::string QuoteRslString(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('"');
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string FormatRslValue(const RslValue& value) {
  if (const auto* n = std::get_if<std::int64_t>(&value)) return std::to_string(*n);
  if (const auto* s = std::get_if<std::string>(&value)) return QuoteRslString(*s);
  std::string out;
  for (const auto& item : std::get<RslList>(value)) {
    if (!out.empty()) out.push_back(' ');
    out += QuoteRslString(item);
  }
  return out;
}

std::optional<std::string> NormalizeAttrName(std::string_view name) {
  if (name.empty() || !IsNameStart(name.front())) return std::nullopt;
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (!IsNameChar(c)) return std::nullopt;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

bool IsPositiveIntAttr(std::string_view name) {
  return name == "count" || name == "maxmemory" || name == "maxcputime";
}

RslError::RslError(Kind kind, std::size_t position, std::string message)
    : std::runtime_error(std::move(message)), kind_(kind), position_(position) {}

void RslRequest::Add(std::string_view name, RslValue value) {
  auto normalized = NormalizeAttrName(name);
  if (!normalized) {
    throw RslError(RslError::Kind::kSyntax, 0,
                   "invalid attribute name '" + std::string(name) + "'");
  }
  if (Contains(*normalized)) {
    throw RslError(RslError::Kind::kDuplicateAttribute, 0,
                   "duplicate attribute '" + *normalized + "'");
  }
  if (const auto* list = std::get_if<RslList>(&value); list && list->empty()) {
    throw RslError(RslError::Kind::kInvalidValue, 0, "empty list value");
  }
  value = CheckWellKnown(*normalized, std::move(value), 0);
  attributes_.emplace_back(std::move(*normalized), std::move(value));
}

const RslValue* RslRequest::Find(std::string_view name) const {
  auto normalized = NormalizeAttrName(name);
  if (!normalized) return nullptr;
  for (const auto& [n, v] : attributes_) {
    if (n == *normalized) return &v;
  }
  return nullptr;
}

bool operator==(const RslRequest& a, const RslRequest& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, value] : a.attributes_) {
    const RslValue* other = b.Find(name);
    if (other == nullptr || !(*other == value)) return false;
  }
  return true;
}

RslRequest ParseRsl(std::string_view text) { return Parser(text).Parse(); }

std::string SerializeRsl(const RslRequest& request) {
  std::vector<const RslRequest::Attribute*> sorted;
  sorted.reserve(request.size());
  for (const auto& attr : request.attributes()) sorted.push_back(&attr);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });
  std::string out = "&";
  for (const auto* attr : sorted) {
    out += "(" + attr->first + "=" + FormatRslValue(attr->second) + ")";
  }
  return out;
}

std::optional<RslValue> GetAttr(const RslRequest& request, std::string_view name) {
  if (const RslValue* v = request.Find(name)) return *v;
  return std::nullopt;
}

}  // namespace gridauthz
