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

#include "pf/tensor.hpp"

#include <functional>
#include <numeric>

#include "pf/error.hpp"

namespace pf {

std::size_t ShapeVolume(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape_in, double fill)
    : shape(std::move(shape_in)), data(ShapeVolume(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> values)
    : shape(std::move(shape_in)), data(std::move(values)) {
  if (data.size() != ShapeVolume(shape)) {
    throw Error(ErrorCode::kShapeMismatch, "tensor data does not match shape");
  }
}

double PairwiseSum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 64;
  if (values.size() <= kLeaf) {
    double sum = 0.0;
    for (const double v : values) sum += v;
    return sum;
  }
  const std::size_t half = values.size() / 2;
  return PairwiseSum(values.first(half)) + PairwiseSum(values.subspan(half));
}

}  // namespace pf
