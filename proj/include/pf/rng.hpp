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

#ifndef PF_RNG_HPP_
#define PF_RNG_HPP_

#include <array>
#include <cstdint>
#include <string_view>

namespace pf {

// FNV-1a, 64-bit.
std::uint64_t HashString(std::string_view text);

// SplitMix64 finalizer applied to (seed, salt). Used to derive independent
// sub-stream keys, e.g. DeriveSeed(DeriveSeed(seed, task_hash), image_hash).
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t salt);

// Philox4x32-10 block function: encrypts a 128-bit counter under a 64-bit key.
std::array<std::uint32_t, 4> Philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Counter-based generator. The sample stream is a pure function of
// (key, stream): block n is Philox4x32(counter = {n_lo, n_hi, stream_lo,
// stream_hi}, key), and each block yields two 64-bit words (lo word first).
// Distributions below are implemented here (not via <random>) so outputs are
// identical across standard libraries.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t stream = 0);

  std::uint64_t NextU64();
  // 53-bit uniform in [0, 1).
  double Uniform();
  // Uniform in (0, 1).
  double UniformOpen();
  // Unbiased integer in [0, n); n > 0.
  std::uint64_t UniformInt(std::uint64_t n);
  // Standard normal via Box-Muller; the second variate is cached.
  double Normal();
  // Knuth multiplication for mean < 10, PTRS transformed rejection otherwise.
  std::uint64_t Poisson(double mean);

 private:
  void Refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace pf

#endif  // PF_RNG_HPP_
