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

#include "cli/support.h"

#include <fstream>
#include <sstream>

namespace gridauthz::cli {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int ExitCodeFor(const JobManagerError& e) {
  switch (e.kind()) {
    case JobManagerError::Kind::kParse:
    case JobManagerError::Kind::kBadArgument:
    case JobManagerError::Kind::kUnknownJob:
      return kExitInput;
    default:
      return kExitRefused;
  }
}

std::string OutcomeName(const JobManagerError& e) {
  std::string name(ToString(e.kind()));
  if (e.scope()) name += "(" + std::string(ToString(*e.scope())) + ")";
  return name;
}

std::string DescribeInputError(const std::exception& e) {
  if (const auto* p = dynamic_cast<const PolicyError*>(&e)) {
    return "policy error at line " + std::to_string(p->line()) + " column " +
           std::to_string(p->column()) + ": " + p->what();
  }
  if (const auto* r = dynamic_cast<const RslError*>(&e)) {
    return "rsl error at offset " + std::to_string(r->position()) + ": " + r->what();
  }
  if (dynamic_cast<const CredentialError*>(&e)) return std::string("credential error: ") + e.what();
  if (const auto* c = dynamic_cast<const CapabilityError*>(&e)) {
    return "capability error (" + std::string(ToString(c->kind())) + "): " + c->what();
  }
  return e.what();
}

}  // namespace gridauthz::cli
