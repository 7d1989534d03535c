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

#include "fedner/bio.h"

#include "fedner/common.h"

namespace fedner {

std::optional<BioTag> parse_bio_tag(std::string_view tag) {
  if (tag == "O") return BioTag{};
  if (tag.size() < 3 || tag[1] != '-') return std::nullopt;
  BioTag parsed;
  if (tag[0] == 'B') {
    parsed.prefix = BioPrefix::kBegin;
  } else if (tag[0] == 'I') {
    parsed.prefix = BioPrefix::kInside;
  } else {
    return std::nullopt;
  }
  parsed.type = std::string(tag.substr(2));
  return parsed;
}

BioTag parse_bio_tag_or_throw(std::string_view tag) {
  auto parsed = parse_bio_tag(tag);
  if (!parsed) throw ValidationError("invalid BIO tag '" + std::string(tag) + "'");
  return *std::move(parsed);
}

std::string format_bio_tag(const BioTag& tag) {
  switch (tag.prefix) {
    case BioPrefix::kOutside: return "O";
    case BioPrefix::kBegin: return "B-" + tag.type;
    case BioPrefix::kInside: return "I-" + tag.type;
  }
  return "O";
}

}  // namespace fedner
