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

#include "fedner/param_vector.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fedner/common.h"

namespace fedner {

void Layout::add(std::string name, size_t rows, size_t cols) {
  require(!contains(name), "duplicate parameter segment '" + name + "'");
  segments_.push_back(Segment{std::move(name), size_, rows, cols});
  size_ += rows * cols;
}

const Segment& Layout::segment(std::string_view name) const {
  for (const Segment& s : segments_) {
    if (s.name == name) return s;
  }
  throw ValidationError("no parameter segment named '" + std::string(name) + "'");
}

bool Layout::contains(std::string_view name) const {
  return std::any_of(segments_.begin(), segments_.end(),
                     [&](const Segment& s) { return s.name == name; });
}

ParamVector::ParamVector(Layout layout)
    : layout_(std::move(layout)), values_(layout_.size(), 0.0) {}

ParamVector::ParamVector(Layout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  require(values_.size() == layout_.size(),
          "parameter vector has " + std::to_string(values_.size()) +
              " values but its layout needs " + std::to_string(layout_.size()));
}

std::span<double> ParamVector::segment(std::string_view name) {
  const Segment& s = layout_.segment(name);
  return std::span<double>(values_).subspan(s.offset, s.length());
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  const Segment& s = layout_.segment(name);
  return std::span<const double>(values_).subspan(s.offset, s.length());
}

std::optional<std::string> ParamVector::first_non_finite_segment() const {
  for (const Segment& s : layout_.segments()) {
    for (size_t i = s.offset; i < s.offset + s.length(); ++i) {
      if (!std::isfinite(values_[i])) return s.name;
    }
  }
  return std::nullopt;
}

void ParamVector::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

void require_same_layout(const ParamVector& a, const ParamVector& b,
                         std::string_view context) {
  require(a.layout() == b.layout(),
          std::string(context) + ": parameter layouts differ");
}

double max_abs_difference(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b, "max_abs_difference");
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b, "l2_distance");
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum);
}

}  // namespace fedner
