// Copyright 2026 The fedner Authors.
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

#ifndef FEDNER_COMMON_H_
#define FEDNER_COMMON_H_

#include <stdexcept>
#include <string>

namespace fedner {

// Raised when an input violates a documented precondition (bad config field,
// malformed corpus line, mismatched layouts). The CLI maps it to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws ValidationError with `message` unless `condition` holds.
inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace fedner

#endif  // FEDNER_COMMON_H_
