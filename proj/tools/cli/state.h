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

#ifndef GRIDAUTHZ_TOOLS_CLI_STATE_H_
#define GRIDAUTHZ_TOOLS_CLI_STATE_H_

#include <optional>
#include <stdexcept>
#include <string>

#include "gridauthz/jobmgr.h"

namespace gridauthz::cli {

inline constexpr char kStateFormat[] = "gridauthz-state";
inline constexpr int kStateVersion = 1;

class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything that survives between CLI invocations. Signing keys are not
// persisted; they are supplied per command.
struct SimState {
  EngineConfig config;
  EngineSnapshot snapshot;
};

std::string EncodeState(const SimState& state);
// Throws StateError on malformed content or an unknown format/version.
SimState DecodeState(const std::string& text);

// An exclusively locked state file, held for the lifetime of the object.
class StateFile {
 public:
  explicit StateFile(const std::string& path);
  ~StateFile();
  StateFile(const StateFile&) = delete;
  StateFile& operator=(const StateFile&) = delete;

  // nullopt when the file is new or empty.
  std::optional<SimState> Load();
  void Save(const SimState& state);

 private:
  std::string path_;
  int fd_ = -1;
};

}  // namespace gridauthz::cli

#endif  // GRIDAUTHZ_TOOLS_CLI_STATE_H_
