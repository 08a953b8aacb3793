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

#ifndef PF_PARALLEL_HPP_
#define PF_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace pf {

// PF_THREADS when set to a positive integer, otherwise the hardware
// concurrency (at least 1).
int ThreadsFromEnv();

// Runs body(0..n-1) on up to `threads` workers. Work stops being handed out
// after the first failure; the exception of the lowest failing index is
// rethrown so the reported error does not depend on scheduling.
void ParallelFor(std::size_t n, int threads,
                 const std::function<void(std::size_t)>& body);

}  // namespace pf

#endif  // PF_PARALLEL_HPP_
