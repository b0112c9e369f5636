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

// Randomized decision-point checks shared by the unit and acceptance suites.

#ifndef GRIDAUTHZ_TESTS_TESTING_PROPERTIES_H_
#define GRIDAUTHZ_TESTS_TESTING_PROPERTIES_H_

#include <cstdint>
#include <string>

namespace oracle {

struct PropertyReport {
  int cases = 0;
  int mismatches = 0;
  int permits = 0;  // library permits, to show the cases are not all denials
  std::string first_failure;  // rendered inputs of the first mismatch
};

// Pull-mode Decide against DecidePush over a derived, signed capability:
// effect and permitting blocks must agree.
PropertyReport CheckPushPull(std::uint64_t seed, int cases);

// Decide against the brute-force evaluator: effect and permitting blocks.
PropertyReport CheckOracle(std::uint64_t seed, int cases);

}  // namespace oracle

#endif  // GRIDAUTHZ_TESTS_TESTING_PROPERTIES_H_
