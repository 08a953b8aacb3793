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

#ifndef PF_DIFFUSION_HPP_
#define PF_DIFFUSION_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "pf/tensor.hpp"

namespace pf {

// Timesteps are 1-based: t = 1..T. alpha_bar(0) is defined as 1.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;       // beta[t-1]
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha

  double beta_at(int t) const { return beta[t - 1]; }
  double alpha_at(int t) const { return alpha[t - 1]; }
  double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar[t - 1]; }
};

inline constexpr int kDefaultTimesteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 2e-2;

// Linear betas from beta_start (t = 1) to beta_end (t = T).
NoiseSchedule MakeSchedule(int T = kDefaultTimesteps,
                           double beta_start = kDefaultBetaStart,
                           double beta_end = kDefaultBetaEnd);
NoiseSchedule ScheduleFromBetas(std::vector<double> betas);

nlohmann::json ScheduleToJson(const NoiseSchedule& s);
// Accepts {"T", "beta": [...]} or the linear {"T", "beta_start", "beta_end"}.
NoiseSchedule ScheduleFromJson(const nlohmann::json& j);

// Opaque payloads handed to the predictor untouched.
struct ConditioningContext {
  std::optional<Tensor> coarse;
  std::optional<std::vector<double>> prompt;
};

struct NoisePredictor {
  std::function<Tensor(const Tensor& x_t, int t, const ConditioningContext& cond)> fn;
  // False when the callable must not run on several trajectories at once.
  bool concurrent_safe = true;
};

struct SamplerConfig {
  int steps = 50;
  double eta = 0.0;
};

// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Tensor ForwardDiffuse(const Tensor& x0, int t, const Tensor& eps,
                      const NoiseSchedule& s);

// sqrt(beta_t (1 - abar_{t-1}) / (1 - abar_t)).
double PosteriorSigma(const NoiseSchedule& s, int t);

// x_{t-1} = (x_t - (1 - alpha_t) / sqrt(1 - abar_t) eps_hat) / sqrt(alpha_t)
//           + sigma_t z.
// z may be null for a noiseless step; it is ignored at t = 1.
Tensor AncestralStep(const Tensor& x_t, int t, const Tensor& eps_hat,
                     const NoiseSchedule& s, double sigma_t, const Tensor* z);

// Decreasing, uniformly spaced: t_i = floor(i T / steps) + 1, so t = 1 is
// always the final step.
std::vector<int> DdimTimesteps(int T, int steps);

// eta sqrt((1 - abar_prev)/(1 - abar_t)) sqrt(1 - abar_t/abar_prev).
double DdimSigma(const NoiseSchedule& s, int t, int t_prev, double eta);

// x0_hat = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t);
// x_prev = sqrt(abar_prev) x0_hat + sqrt(1 - abar_prev - sigma^2) eps_hat
//          + sigma z.
// t_prev = 0 produces the final clean estimate.
Tensor DdimStep(const Tensor& x_t, int t, int t_prev, const Tensor& eps_hat,
                const NoiseSchedule& s, double eta, const Tensor* z);

// The standard-normal draw used at sampler step `step_index`.
Tensor SamplerNoise(std::uint64_t seed, int step_index,
                    const std::vector<std::size_t>& shape);

// i.i.d. standard normal tensor from its own stream.
Tensor GaussianTensor(const std::vector<std::size_t>& shape, std::uint64_t seed);

using TrajectoryCallback = std::function<void(int step_index, int t, const Tensor& x)>;

Tensor DdimSample(const Tensor& x_T, const NoisePredictor& f,
                  const ConditioningContext& cond, const NoiseSchedule& s,
                  const SamplerConfig& cfg, std::uint64_t seed,
                  const TrajectoryCallback& on_step = {});

// Runs independent trajectories on up to `threads` workers (a single worker
// when the predictor is not concurrent-safe). Sample i uses seeds[i].
std::vector<Tensor> DdimSampleBatch(const std::vector<Tensor>& x_T,
                                    const NoisePredictor& f,
                                    const ConditioningContext& cond,
                                    const NoiseSchedule& s, const SamplerConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds,
                                    int threads);

// Exact noise prediction for Gaussian data x0 ~ N(mu0, var0) per element.
// mu0 and var0 are either full-size or single-element (broadcast).
Tensor AnalyticEpsilon(const Tensor& x_t, int t, const NoiseSchedule& s,
                       const Tensor& mu0, const Tensor& var0);

// E[x0 | x_t] under the same prior.
Tensor PosteriorMeanX0(const Tensor& x_t, int t, const NoiseSchedule& s,
                       const Tensor& mu0, const Tensor& var0);

NoisePredictor MakeAnalyticPredictor(const NoiseSchedule& s, Tensor mu0, Tensor var0);

// Mean squared error over all elements; grad is d loss / d eps_hat.
TensorLoss EpsilonLoss(const Tensor& eps, const Tensor& eps_hat);

}  // namespace pf

#endif  // PF_DIFFUSION_HPP_
