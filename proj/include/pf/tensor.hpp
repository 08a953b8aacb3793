/*
 * Copyright 2026 The pfbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PF_TENSOR_HPP_
#define PF_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace pf {

// Dense double-precision array with an explicit shape. Row-major.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_in, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape_in, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t ShapeVolume(std::span<const std::size_t> shape);

// A scalar loss and its gradient with respect to one argument.
struct TensorLoss {
  double loss = 0.0;
  Tensor grad;
};

// One feature map of a network layer, channel-last (h, w, c).
struct FeatureLayer {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<double> data;

  double at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
};

using FeatureStack = std::vector<FeatureLayer>;

// Pairwise (cascade) summation with a fixed split rule so results do not
// depend on how callers chunk the work.
double PairwiseSum(std::span<const double> values);

}  // namespace pf

#endif  // PF_TENSOR_HPP_
