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

#include <charconv>

namespace gridauthz {

namespace {

struct Token {
  enum class Type { kWord, kString, kInt, kLBrace, kRBrace, kSemi, kComma, kDotDot, kEnd };

  Type type = Type::kEnd;
  std::string text;
  std::int64_t number = 0;
  int line = 1;
  int column = 1;
};

std::string Describe(const Token& t) {
  switch (t.type) {
    case Token::Type::kWord: return "'" + t.text + "'";
    case Token::Type::kString: return "string " + QuoteRslString(t.text);
    case Token::Type::kInt: return "integer " + std::to_string(t.number);
    case Token::Type::kLBrace: return "'{'";
    case Token::Type::kRBrace: return "'}'";
    case Token::Type::kSemi: return "';'";
    case Token::Type::kComma: return "','";
    case Token::Type::kDotDot: return "'..'";
    case Token::Type::kEnd: return "end of input";
  }
  return "?";
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token Next() {
    SkipSpaceAndComments();
    Token tok;
    tok.line = line_;
    tok.column = column_;
    if (AtEnd()) return tok;
    char c = Peek();
    if (IsWordStart(c)) {
      tok.type = Token::Type::kWord;
      while (!AtEnd() && IsWordChar(Peek())) tok.text.push_back(Advance());
      return tok;
    }
    if (c == '-' || IsDigit(c)) {
      tok.type = Token::Type::kInt;
      std::string digits;
      if (c == '-') digits.push_back(Advance());
      if (AtEnd() || !IsDigit(Peek())) Fail(tok, "expected digit after '-'");
      while (!AtEnd() && IsDigit(Peek())) digits.push_back(Advance());
      auto [ptr, ec] =
          std::from_chars(digits.data(), digits.data() + digits.size(), tok.number);
      if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        Fail(tok, "integer out of range");
      }
      tok.text = digits;
      return tok;
    }
    if (c == '"') {
      tok.type = Token::Type::kString;
      Advance();
      for (;;) {
        if (AtEnd()) Fail(tok, "unterminated string");
        char ch = Advance();
        if (ch == '"') break;
        if (ch == '\n') Fail(tok, "newline in string");
        if (ch == '\\') {
          if (AtEnd() || (Peek() != '"' && Peek() != '\\')) {
            Fail(tok, "invalid escape in string");
          }
          ch = Advance();
        }
        tok.text.push_back(ch);
      }
      return tok;
    }
    if (c == '.' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '.') {
      Advance();
      Advance();
      tok.type = Token::Type::kDotDot;
      return tok;
    }
    Advance();
    switch (c) {
      case '{': tok.type = Token::Type::kLBrace; return tok;
      case '}': tok.type = Token::Type::kRBrace; return tok;
      case ';': tok.type = Token::Type::kSemi; return tok;
      case ',': tok.type = Token::Type::kComma; return tok;
      default: break;
    }
    Fail(tok, std::string("unexpected character '") + c + "'");
  }

 private:
  static bool IsWordStart(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool IsDigit(char c) { return c >= '0' && c <= '9'; }
  static bool IsWordChar(char c) { return IsWordStart(c) || IsDigit(c) || c == '-'; }

  [[noreturn]] static void Fail(const Token& at, const std::string& message) {
    throw PolicyError(PolicyError::Kind::kSyntax, at.line, at.column, message);
  }

  void SkipSpaceAndComments() {
    while (!AtEnd()) {
      char c = Peek();
      if (c == '#') {
        while (!AtEnd() && Peek() != '\n') Advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        Advance();
      } else {
        break;
      }
    }
  }

  char Advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }
  bool AtEnd() const { return pos_ >= text_.size(); }
  char Peek() const { return text_[pos_]; }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { current_ = lexer_.Next(); }

  PolicyDocument Parse() {
    PolicyDocument doc;
    ExpectWord("policy");
    doc.name = ExpectString();
    ExpectWord("source");
    Token src = current_;
    std::string source = ExpectAnyWord("'resource' or 'vo'");
    if (source == "resource") {
      doc.source = PolicySource::kResource;
    } else if (source == "vo") {
      doc.source = PolicySource::kVo;
    } else {
      Fail(src, "expected 'resource' or 'vo', found '" + source + "'");
    }
    Expect(Token::Type::kLBrace, "'{'");
    while (current_.type != Token::Type::kRBrace) ParseItem(doc);
    Advance();
    if (current_.type != Token::Type::kEnd) {
      Fail(current_, "expected end of input, found " + Describe(current_));
    }
    return doc;
  }

 private:
  void ParseItem(PolicyDocument& doc) {
    Token at = current_;
    std::string word = ExpectAnyWord("'subject', 'trust', 'allocation' or 'member-quota'");
    if (word == "subject") {
      doc.blocks.push_back(ParseBlock());
    } else if (word == "trust") {
      ExpectWord("vo");
      std::string vo = ExpectString();
      Expect(Token::Type::kSemi, "';'");
      if (doc.source != PolicySource::kResource) {
        Misplaced(at, "'trust' is only allowed in resource policies");
      }
      doc.trust.push_back(std::move(vo));
    } else if (word == "allocation") {
      std::int64_t amount = ExpectNonNegative();
      ExpectWord("cpu-seconds");
      Expect(Token::Type::kSemi, "';'");
      if (doc.source != PolicySource::kVo) {
        Misplaced(at, "'allocation' is only allowed in vo policies");
      }
      if (doc.allocation) Misplaced(at, "duplicate 'allocation'");
      doc.allocation = amount;
    } else if (word == "member-quota") {
      std::string member = ExpectString();
      std::int64_t amount = ExpectNonNegative();
      ExpectWord("cpu-seconds");
      Expect(Token::Type::kSemi, "';'");
      if (doc.source != PolicySource::kVo) {
        Misplaced(at, "'member-quota' is only allowed in vo policies");
      }
      if (!doc.member_quotas.emplace(member, amount).second) {
        Misplaced(at, "duplicate member-quota for '" + member + "'");
      }
    } else {
      Fail(at, "expected 'subject', 'trust', 'allocation' or 'member-quota', found '" +
                   word + "'");
    }
  }

  SubjectBlock ParseBlock() {
    SubjectBlock block;
    Token at = current_;
    std::string kind = ExpectAnyWord("'identity', 'group' or 'any'");
    if (kind == "identity") {
      block.matcher = SubjectMatcher::Identity(ExpectString());
    } else if (kind == "group") {
      block.matcher = SubjectMatcher::Group(ExpectString());
    } else if (kind == "any") {
      block.matcher = SubjectMatcher::Any();
    } else {
      Fail(at, "expected 'identity', 'group' or 'any', found '" + kind + "'");
    }
    Expect(Token::Type::kLBrace, "'{'");
    std::set<JobAction> unrestricted;
    while (current_.type != Token::Type::kRBrace) ParseStatement(block, unrestricted);
    Advance();
    for (JobAction a : unrestricted) block.jobtag_grants.erase(a);
    return block;
  }

  void ParseStatement(SubjectBlock& block, std::set<JobAction>& unrestricted) {
    Token at = current_;
    std::string word = ExpectAnyWord("statement");
    if (word == "allow") {
      ExpectWord("action");
      std::vector<JobAction> actions{ExpectAction()};
      while (current_.type == Token::Type::kComma) {
        Advance();
        actions.push_back(ExpectAction());
      }
      std::set<std::string> tags;
      bool tagged = false;
      if (IsWord("on")) {
        Advance();
        ExpectWord("jobtag");
        tagged = true;
        tags.insert(ExpectString());
        while (current_.type == Token::Type::kComma) {
          Advance();
          tags.insert(ExpectString());
        }
      }
      Expect(Token::Type::kSemi, "';'");
      for (JobAction a : actions) {
        block.allowed_actions.insert(a);
        if (!tagged) {
          unrestricted.insert(a);
          continue;
        }
        if (a == JobAction::kStart) {
          Misplaced(at, "jobtag grants do not apply to 'start'");
        }
        block.jobtag_grants[a].insert(tags.begin(), tags.end());
      }
    } else if (word == "attr") {
      std::string name = ExpectAttrName();
      Assertion a{Assertion::Kind::kMayContain, std::move(name), ParseSpec()};
      Expect(Token::Type::kSemi, "';'");
      block.assertions.push_back(std::move(a));
    } else if (word == "require" || word == "forbid") {
      ExpectWord("attr");
      std::string name = ExpectAttrName();
      std::optional<ValueSpec> spec;
      if (current_.type != Token::Type::kSemi) spec = ParseSpec();
      Expect(Token::Type::kSemi, "';'");
      block.assertions.push_back(
          {word == "require" ? Assertion::Kind::kMustContain : Assertion::Kind::kMustNotContain,
           std::move(name), std::move(spec)});
    } else if (word == "closed-world") {
      Expect(Token::Type::kSemi, "';'");
      block.closed_world = true;
    } else {
      Fail(at, "expected 'allow', 'attr', 'require', 'forbid' or 'closed-world', found '" +
                   word + "'");
    }
  }

  ValueSpec ParseSpec() {
    std::vector<ValueSpec> alternatives{ParsePrimarySpec()};
    while (IsWord("or")) {
      Advance();
      alternatives.push_back(ParsePrimarySpec());
    }
    return ValueSpec::Or(std::move(alternatives));
  }

  ValueSpec ParsePrimarySpec() {
    Token at = current_;
    std::string word = ExpectAnyWord("'in', 'range', 'matches', 'max' or 'min'");
    try {
      if (word == "in") {
        Expect(Token::Type::kLBrace, "'{'");
        std::set<std::string> values{ExpectString()};
        while (current_.type == Token::Type::kComma) {
          Advance();
          values.insert(ExpectString());
        }
        Expect(Token::Type::kRBrace, "'}'");
        return ValueSpec::Enum(std::move(values));
      }
      if (word == "range") {
        std::int64_t lo = ExpectInt();
        Expect(Token::Type::kDotDot, "'..'");
        std::int64_t hi = ExpectInt();
        return ValueSpec::Range(lo, hi);
      }
      if (word == "matches") return ValueSpec::Regex(ExpectString());
      if (word == "max") return ValueSpec::Max(ExpectInt());
      if (word == "min") return ValueSpec::Min(ExpectInt());
    } catch (const PolicyError& e) {
      if (e.line() != 0) throw;
      throw PolicyError(e.kind(), at.line, at.column, e.what());
    }
    Fail(at, "expected value spec ('in', 'range', 'matches', 'max' or 'min'), found '" +
                 word + "'");
  }

  JobAction ExpectAction() {
    Token at = current_;
    std::string word = ExpectAnyWord("action");
    auto action = ParseJobAction(word);
    if (!action) Fail(at, "unknown action '" + word + "'");
    return *action;
  }

  std::string ExpectAttrName() {
    Token at = current_;
    std::string word = ExpectAnyWord("attribute name");
    auto name = NormalizeAttrName(word);
    if (!name) Fail(at, "invalid attribute name '" + word + "'");
    return *name;
  }

  bool IsWord(std::string_view w) const {
    return current_.type == Token::Type::kWord && current_.text == w;
  }

  void ExpectWord(std::string_view w) {
    if (!IsWord(w)) Fail(current_, "expected '" + std::string(w) + "', found " + Describe(current_));
    Advance();
  }

  std::string ExpectAnyWord(const std::string& what) {
    if (current_.type != Token::Type::kWord) {
      Fail(current_, "expected " + what + ", found " + Describe(current_));
    }
    std::string w = current_.text;
    Advance();
    return w;
  }

  std::string ExpectString() {
    if (current_.type != Token::Type::kString) {
      Fail(current_, "expected string, found " + Describe(current_));
    }
    std::string s = current_.text;
    Advance();
    return s;
  }

  std::int64_t ExpectInt() {
    if (current_.type != Token::Type::kInt) {
      Fail(current_, "expected integer, found " + Describe(current_));
    }
    std::int64_t n = current_.number;
    Advance();
    return n;
  }

  std::int64_t ExpectNonNegative() {
    Token at = current_;
    std::int64_t n = ExpectInt();
    if (n < 0) Fail(at, "expected non-negative integer");
    return n;
  }

  void Expect(Token::Type type, const std::string& what) {
    if (current_.type != type) {
      Fail(current_, "expected " + what + ", found " + Describe(current_));
    }
    Advance();
  }

  void Advance() { current_ = lexer_.Next(); }

  [[noreturn]] static void Fail(const Token& at, const std::string& message) {
    throw PolicyError(PolicyError::Kind::kSyntax, at.line, at.column, message);
  }
  [[noreturn]] static void Misplaced(const Token& at, const std::string& message) {
    throw PolicyError(PolicyError::Kind::kMisplacedClause, at.line, at.column, message);
  }

  Lexer lexer_;
  Token current_;
};

std::string QuotedList(const std::set<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += QuoteRslString(item);
  }
  return out;
}

std::string ActionList(const std::vector<JobAction>& actions) {
  std::string out;
  for (JobAction a : actions) {
    if (!out.empty()) out += ", ";
    out += ToString(a);
  }
  return out;
}

}  // namespace

std::string_view ToString(PolicySource source) {
  return source == PolicySource::kResource ? "resource" : "vo";
}

PolicyError::PolicyError(Kind kind, int line, int column, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " +
                                        std::to_string(column) + ": " + message
                                  : message),
      kind_(kind),
      line_(line),
      column_(column) {}

bool SubjectMatcher::Matches(const GridCredential& cred) const {
  switch (kind) {
    case Kind::kIdentity: return cred.subject == value;
    case Kind::kGroup: return cred.groups.count(value) != 0;
    case Kind::kAny: return true;
  }
  return false;
}

std::set<std::string> SubjectBlock::AllowedNames() const {
  std::set<std::string> names;
  for (const auto& a : assertions) {
    if (a.kind != Assertion::Kind::kMustNotContain) names.insert(a.attr);
  }
  return names;
}

PolicyDocument ParsePolicy(std::string_view text) { return Parser(text).Parse(); }

std::string FormatMatcher(const SubjectMatcher& matcher) {
  switch (matcher.kind) {
    case SubjectMatcher::Kind::kIdentity: return "identity " + QuoteRslString(matcher.value);
    case SubjectMatcher::Kind::kGroup: return "group " + QuoteRslString(matcher.value);
    case SubjectMatcher::Kind::kAny: return "any";
  }
  return {};
}

std::string FormatAssertion(const Assertion& a) {
  std::string out;
  switch (a.kind) {
    case Assertion::Kind::kMayContain: out = "attr "; break;
    case Assertion::Kind::kMustContain: out = "require attr "; break;
    case Assertion::Kind::kMustNotContain: out = "forbid attr "; break;
  }
  out += a.attr;
  if (a.spec) out += " " + FormatValueSpec(*a.spec);
  return out;
}

std::string FormatPolicy(const PolicyDocument& doc) {
  std::string out = "policy " + QuoteRslString(doc.name) + " source " +
                    std::string(ToString(doc.source)) + " {\n";
  for (const auto& vo : doc.trust) out += "  trust vo " + QuoteRslString(vo) + ";\n";
  if (doc.allocation) {
    out += "  allocation " + std::to_string(*doc.allocation) + " cpu-seconds;\n";
  }
  for (const auto& [member, quota] : doc.member_quotas) {
    out += "  member-quota " + QuoteRslString(member) + " " + std::to_string(quota) +
           " cpu-seconds;\n";
  }
  for (const auto& block : doc.blocks) {
    out += "  subject " + FormatMatcher(block.matcher) + " {\n";
    std::vector<JobAction> open;
    for (JobAction a : block.allowed_actions) {
      if (block.jobtag_grants.count(a) == 0) open.push_back(a);
    }
    if (!open.empty()) out += "    allow action " + ActionList(open) + ";\n";
    // Actions sharing the same jobtag set share one statement.
    std::map<std::set<std::string>, std::vector<JobAction>> by_tags;
    std::vector<std::set<std::string>> tag_order;
    for (const auto& [action, tags] : block.jobtag_grants) {
      auto& actions = by_tags[tags];
      if (actions.empty()) tag_order.push_back(tags);
      actions.push_back(action);
    }
    for (const auto& tags : tag_order) {
      out += "    allow action " + ActionList(by_tags[tags]) + " on jobtag " +
             QuotedList(tags) + ";\n";
    }
    for (const auto& a : block.assertions) out += "    " + FormatAssertion(a) + ";\n";
    if (block.closed_world) out += "    closed-world;\n";
    out += "  }\n";
  }
  out += "}\n";
  return out;
}

std::vector<std::size_t> ApplicableBlocks(const PolicyDocument& doc,
                                          const GridCredential& cred) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < doc.blocks.size(); ++i) {
    if (doc.blocks[i].matcher.Matches(cred)) indices.push_back(i);
  }
  return indices;
}

}  // namespace gridauthz
