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

#include "pf/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pf/error.hpp"
#include "pf/parallel.hpp"
#include "pf/rng.hpp"

namespace pf {
namespace {

void CheckShapes(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b) || a.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": shapes differ");
  }
}

void CheckTimestep(const NoiseSchedule& s, int t) {
  if (t < 1 || t > s.T) {
    throw Error(ErrorCode::kTimestepOutOfRange,
                "t=" + std::to_string(t) + " outside [1, " + std::to_string(s.T) + "]");
  }
}

double Broadcast(const Tensor& v, std::size_t i) {
  return v.size() == 1 ? v.data[0] : v.data[i];
}

void CheckBroadcast(const Tensor& x, const Tensor& v, const char* what) {
  if (v.size() != 1 && v.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + " must be scalar or match the sample shape");
  }
}

}  // namespace

NoiseSchedule ScheduleFromBetas(std::vector<double> betas) {
  if (betas.empty()) throw Error(ErrorCode::kInvalidRange, "empty schedule");
  NoiseSchedule s;
  s.T = static_cast<int>(betas.size());
  s.beta = std::move(betas);
  s.alpha.resize(s.beta.size());
  s.alpha_bar.resize(s.beta.size());
  double running = 1.0;
  for (std::size_t i = 0; i < s.beta.size(); ++i) {
    if (!(s.beta[i] > 0.0 && s.beta[i] < 1.0)) {
      throw Error(ErrorCode::kInvalidRange,
                  "beta_" + std::to_string(i + 1) + " outside (0, 1)");
    }
    s.alpha[i] = 1.0 - s.beta[i];
    running *= s.alpha[i];
    s.alpha_bar[i] = running;
  }
  return s;
}

NoiseSchedule MakeSchedule(int T, double beta_start, double beta_end) {
  if (T < 1 || !(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw Error(ErrorCode::kInvalidRange,
                "need T >= 1 and 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    betas[t - 1] = T == 1 ? beta_start
                          : beta_start + (beta_end - beta_start) * (t - 1) / (T - 1);
  }
  return ScheduleFromBetas(std::move(betas));
}

nlohmann::json ScheduleToJson(const NoiseSchedule& s) {
  return {{"T", s.T}, {"beta", s.beta}};
}

NoiseSchedule ScheduleFromJson(const nlohmann::json& j) {
  try {
    if (!j.contains("beta")) {
      // Linear form: {"T": .., "beta_start": .., "beta_end": ..}.
      return MakeSchedule(j.value("T", kDefaultTimesteps),
                          j.value("beta_start", kDefaultBetaStart),
                          j.value("beta_end", kDefaultBetaEnd));
    }
    auto betas = j.at("beta").get<std::vector<double>>();
    if (j.contains("T") && j["T"].get<int>() != static_cast<int>(betas.size())) {
      throw Error(ErrorCode::kInvalidRange, "T does not match the beta array length");
    }
    return ScheduleFromBetas(std::move(betas));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("schedule: ") + e.what());
  }
}

Tensor ForwardDiffuse(const Tensor& x0, int t, const Tensor& eps,
                      const NoiseSchedule& s) {
  CheckShapes(x0, eps, "forward_diffuse");
  CheckTimestep(s, t);
  const double a = std::sqrt(s.alpha_bar_at(t));
  const double b = std::sqrt(1.0 - s.alpha_bar_at(t));
  Tensor out(x0.shape);
  for (std::size_t i = 0; i < x0.size(); ++i) out.data[i] = a * x0.data[i] + b * eps.data[i];
  return out;
}

double PosteriorSigma(const NoiseSchedule& s, int t) {
  CheckTimestep(s, t);
  return std::sqrt(s.beta_at(t) * (1.0 - s.alpha_bar_at(t - 1)) /
                   (1.0 - s.alpha_bar_at(t)));
}

Tensor AncestralStep(const Tensor& x_t, int t, const Tensor& eps_hat,
                     const NoiseSchedule& s, double sigma_t, const Tensor* z) {
  CheckShapes(x_t, eps_hat, "ancestral_step");
  CheckTimestep(s, t);
  const bool add_noise = sigma_t > 0.0 && t > 1;
  if (add_noise) {
    if (z == nullptr) {
      throw Error(ErrorCode::kMissingNoise,
                  "sigma_t > 0 at t=" + std::to_string(t) + " needs a noise tensor");
    }
    CheckShapes(x_t, *z, "ancestral_step noise");
  }
  const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha_at(t));
  const double eps_coef = (1.0 - s.alpha_at(t)) / std::sqrt(1.0 - s.alpha_bar_at(t));
  Tensor out(x_t.shape);
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    double v = inv_sqrt_alpha * (x_t.data[i] - eps_coef * eps_hat.data[i]);
    if (add_noise) v += sigma_t * z->data[i];
    out.data[i] = v;
  }
  return out;
}

std::vector<int> DdimTimesteps(int T, int steps) {
  if (steps < 1 || steps > T) {
    throw Error(ErrorCode::kInvalidArgument,
                "steps must lie in [1, " + std::to_string(T) + "]");
  }
  std::vector<int> ts(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    ts[i] = static_cast<int>(static_cast<long long>(i) * T / steps) + 1;
  }
  std::reverse(ts.begin(), ts.end());
  return ts;
}

double DdimSigma(const NoiseSchedule& s, int t, int t_prev, double eta) {
  const double ab = s.alpha_bar_at(t);
  const double ab_prev = s.alpha_bar_at(t_prev);
  const double var = (1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev);
  return eta * std::sqrt(std::max(var, 0.0));
}

Tensor DdimStep(const Tensor& x_t, int t, int t_prev, const Tensor& eps_hat,
                const NoiseSchedule& s, double eta, const Tensor* z) {
  CheckShapes(x_t, eps_hat, "ddim_step");
  CheckTimestep(s, t);
  if (t_prev < 0 || t_prev >= t) {
    throw Error(ErrorCode::kTimestepOutOfRange, "t_prev must lie in [0, t)");
  }
  const double sigma = DdimSigma(s, t, t_prev, eta);
  if (sigma > 0.0) {
    if (z == nullptr) throw Error(ErrorCode::kMissingNoise, "ddim_step needs noise");
    CheckShapes(x_t, *z, "ddim_step noise");
  }
  const double ab = s.alpha_bar_at(t);
  const double ab_prev = s.alpha_bar_at(t_prev);
  const double sqrt_ab = std::sqrt(ab);
  const double sqrt_one_minus_ab = std::sqrt(1.0 - ab);
  const double sqrt_ab_prev = std::sqrt(ab_prev);
  const double dir = std::sqrt(std::max(1.0 - ab_prev - sigma * sigma, 0.0));
  Tensor out(x_t.shape);
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double x0_hat = (x_t.data[i] - sqrt_one_minus_ab * eps_hat.data[i]) / sqrt_ab;
    double v = sqrt_ab_prev * x0_hat + dir * eps_hat.data[i];
    if (sigma > 0.0) v += sigma * z->data[i];
    out.data[i] = v;
  }
  return out;
}

Tensor GaussianTensor(const std::vector<std::size_t>& shape, std::uint64_t seed) {
  Tensor out(shape);
  CounterRng rng(seed);
  for (double& v : out.data) v = rng.Normal();
  return out;
}

Tensor SamplerNoise(std::uint64_t seed, int step_index,
                    const std::vector<std::size_t>& shape) {
  return GaussianTensor(shape, DeriveSeed(seed, static_cast<std::uint64_t>(step_index)));
}

Tensor DdimSample(const Tensor& x_T, const NoisePredictor& f,
                  const ConditioningContext& cond, const NoiseSchedule& s,
                  const SamplerConfig& cfg, std::uint64_t seed,
                  const TrajectoryCallback& on_step) {
  if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "eta must lie in [0, 1]");
  }
  if (!f.fn) throw Error(ErrorCode::kInvalidArgument, "no noise predictor");
  const auto ts = DdimTimesteps(s.T, cfg.steps);
  Tensor x = x_T;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const int t = ts[k];
    const int t_prev = k + 1 < ts.size() ? ts[k + 1] : 0;
    const Tensor eps_hat = f.fn(x, t, cond);
    if (!eps_hat.same_shape(x) || eps_hat.size() != x.size()) {
      throw Error(ErrorCode::kPredictorShapeViolation,
                  "predictor output shape differs from its input at t=" + std::to_string(t));
    }
    if (!std::all_of(eps_hat.data.begin(), eps_hat.data.end(),
                     [](double v) { return std::isfinite(v); })) {
      throw Error(ErrorCode::kNonFiniteState,
                  "predictor returned a non-finite value at t=" + std::to_string(t));
    }
    const double sigma = DdimSigma(s, t, t_prev, cfg.eta);
    if (sigma > 0.0) {
      const Tensor z = SamplerNoise(seed, static_cast<int>(k), x.shape);
      x = DdimStep(x, t, t_prev, eps_hat, s, cfg.eta, &z);
    } else {
      x = DdimStep(x, t, t_prev, eps_hat, s, cfg.eta, nullptr);
    }
    if (!std::all_of(x.data.begin(), x.data.end(), [](double v) { return std::isfinite(v); })) {
      throw Error(ErrorCode::kNonFiniteState,
                  "sampler state became non-finite at t=" + std::to_string(t));
    }
    if (on_step) on_step(static_cast<int>(k), t_prev, x);
  }
  return x;
}

std::vector<Tensor> DdimSampleBatch(const std::vector<Tensor>& x_T,
                                    const NoisePredictor& f,
                                    const ConditioningContext& cond,
                                    const NoiseSchedule& s, const SamplerConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds,
                                    int threads) {
  if (seeds.size() != x_T.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one seed per trajectory required");
  }
  std::vector<Tensor> out(x_T.size());
  ParallelFor(x_T.size(), f.concurrent_safe ? threads : 1, [&](std::size_t i) {
    out[i] = DdimSample(x_T[i], f, cond, s, cfg, seeds[i]);
  });
  return out;
}

Tensor PosteriorMeanX0(const Tensor& x_t, int t, const NoiseSchedule& s,
                       const Tensor& mu0, const Tensor& var0) {
  CheckTimestep(s, t);
  CheckBroadcast(x_t, mu0, "mu0");
  CheckBroadcast(x_t, var0, "var0");
  const double ab = s.alpha_bar_at(t);
  const double sqrt_ab = std::sqrt(ab);
  Tensor out(x_t.shape);
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double var = Broadcast(var0, i);
    if (var < 0.0) throw Error(ErrorCode::kInvalidArgument, "var0 must be >= 0");
    out.data[i] = (sqrt_ab * var * x_t.data[i] + (1.0 - ab) * Broadcast(mu0, i)) /
                  (ab * var + 1.0 - ab);
  }
  return out;
}

Tensor AnalyticEpsilon(const Tensor& x_t, int t, const NoiseSchedule& s,
                       const Tensor& mu0, const Tensor& var0) {
  const Tensor mean = PosteriorMeanX0(x_t, t, s, mu0, var0);
  const double sqrt_ab = std::sqrt(s.alpha_bar_at(t));
  const double sqrt_one_minus_ab = std::sqrt(1.0 - s.alpha_bar_at(t));
  Tensor eps(x_t.shape);
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    eps.data[i] = (x_t.data[i] - sqrt_ab * mean.data[i]) / sqrt_one_minus_ab;
  }
  return eps;
}

NoisePredictor MakeAnalyticPredictor(const NoiseSchedule& s, Tensor mu0, Tensor var0) {
  return {[s, mu0 = std::move(mu0), var0 = std::move(var0)](
              const Tensor& x_t, int t, const ConditioningContext&) {
            return AnalyticEpsilon(x_t, t, s, mu0, var0);
          },
          true};
}

TensorLoss EpsilonLoss(const Tensor& eps, const Tensor& eps_hat) {
  CheckShapes(eps, eps_hat, "epsilon_loss");
  if (eps.size() == 0) throw Error(ErrorCode::kEmptyInput, "empty tensors");
  const double n = static_cast<double>(eps.size());
  std::vector<double> sq(eps.size());
  TensorLoss out{0.0, Tensor(eps.shape)};
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps_hat.data[i] - eps.data[i];
    sq[i] = d * d;
    out.grad.data[i] = 2.0 * d / n;
  }
  out.loss = PairwiseSum(sq) / n;
  return out;
}

}  // namespace pf
