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

#ifndef FEDNER_PARAM_VECTOR_H_
#define FEDNER_PARAM_VECTOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedner {

// A named parameter group occupying [offset, offset + rows * cols) of a flat
// vector. Matrices are stored row-major; biases are 1 x n.
struct Segment {
  std::string name;
  size_t offset = 0;
  size_t rows = 0;
  size_t cols = 0;

  size_t length() const { return rows * cols; }
  bool operator==(const Segment&) const = default;
};

// Ordered list of segments that tile a flat vector exactly.
class Layout {
 public:
  // Appends a rows x cols segment after the last one.
  void add(std::string name, size_t rows, size_t cols);

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(std::string_view name) const;
  bool contains(std::string_view name) const;
  size_t size() const { return size_; }

  bool operator==(const Layout&) const = default;

 private:
  std::vector<Segment> segments_;
  size_t size_ = 0;
};

// Flat real-valued vector holding every trainable weight of one model.
class ParamVector {
 public:
  ParamVector() = default;
  // All-zero vector with the given layout.
  explicit ParamVector(Layout layout);
  ParamVector(Layout layout, std::vector<double> values);

  const Layout& layout() const { return layout_; }
  size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;

  double& operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }

  // Name of the first segment holding a NaN or infinity, if any.
  std::optional<std::string> first_non_finite_segment() const;
  bool all_finite() const { return !first_non_finite_segment().has_value(); }

  void fill(double value);

  bool operator==(const ParamVector&) const = default;

 private:
  Layout layout_;
  std::vector<double> values_;
};

// Throws ValidationError naming `context` when the layouts differ.
void require_same_layout(const ParamVector& a, const ParamVector& b,
                         std::string_view context);

// Largest |a_i - b_i|; layouts must match.
double max_abs_difference(const ParamVector& a, const ParamVector& b);

// Euclidean distance between two vectors of the same layout.
double l2_distance(const ParamVector& a, const ParamVector& b);

}  // namespace fedner

#endif  // FEDNER_PARAM_VECTOR_H_
