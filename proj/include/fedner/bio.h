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

#ifndef FEDNER_BIO_H_
#define FEDNER_BIO_H_

#include <optional>
#include <string>
#include <string_view>

namespace fedner {

enum class BioPrefix { kOutside, kBegin, kInside };

struct BioTag {
  BioPrefix prefix = BioPrefix::kOutside;
  std::string type;  // empty for O

  bool operator==(const BioTag&) const = default;
};

// "O", "B-<TYPE>" or "I-<TYPE>" with a non-empty type; nullopt otherwise.
std::optional<BioTag> parse_bio_tag(std::string_view tag);

// Throws ValidationError naming the tag when it does not parse.
BioTag parse_bio_tag_or_throw(std::string_view tag);

std::string format_bio_tag(const BioTag& tag);

}  // namespace fedner

#endif  // FEDNER_BIO_H_
