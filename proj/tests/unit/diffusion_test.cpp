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

#include <cmath>
#include <limits>

#include "pf/diffusion.hpp"
#include "pf/metrics.hpp"
#include "test_util.hpp"

namespace pf {
namespace {

Tensor RandomTensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  return GaussianTensor(shape, seed);
}

TEST(ScheduleTest, DefaultLinearEndpoints) {
  const NoiseSchedule s = MakeSchedule();
  EXPECT_EQ(s.T, 1000);
  EXPECT_DOUBLE_EQ(s.beta_at(1), 1e-4);
  EXPECT_DOUBLE_EQ(s.beta_at(1000), 2e-2);
  EXPECT_DOUBLE_EQ(s.alpha_bar_at(0), 1.0);
  EXPECT_NEAR(s.alpha_bar_at(1), 0.9999, 1e-15);
  EXPECT_NEAR(s.alpha_bar_at(1000) / 4.035829765375676e-05, 1.0, 1e-9);
}

TEST(ScheduleTest, ValidationAndJson) {
  EXPECT_PF_ERROR(MakeSchedule(10, 0.0, 0.1), ErrorCode::kInvalidRange);
  EXPECT_PF_ERROR(MakeSchedule(10, 0.2, 1.0), ErrorCode::kInvalidRange);
  EXPECT_PF_ERROR(ScheduleFromBetas({}), ErrorCode::kInvalidRange);
  const NoiseSchedule s = MakeSchedule(50, 1e-3, 5e-2);
  const NoiseSchedule back = ScheduleFromJson(nlohmann::json::parse(ScheduleToJson(s).dump()));
  EXPECT_EQ(back.beta, s.beta);
  const NoiseSchedule linear =
      ScheduleFromJson({{"T", 50}, {"beta_start", 1e-3}, {"beta_end", 5e-2}});
  EXPECT_EQ(linear.beta, s.beta);
}

TEST(DdimTest, TimestepSpacing) {
  const auto ts = DdimTimesteps(1000, 50);
  ASSERT_EQ(ts.size(), 50u);
  EXPECT_EQ(ts.front(), 981);
  EXPECT_EQ(ts.back(), 1);
  EXPECT_EQ(ts[1], 961);
  const auto full = DdimTimesteps(10, 10);
  EXPECT_EQ(full, (std::vector<int>{10, 9, 8, 7, 6, 5, 4, 3, 2, 1}));
  EXPECT_PF_ERROR(DdimTimesteps(10, 11), ErrorCode::kInvalidArgument);
}

TEST(DdimTest, OneStepInversion) {
  const NoiseSchedule s = MakeSchedule();
  const Tensor x0 = RandomTensor({8, 8}, 1);
  const Tensor eps = RandomTensor({8, 8}, 2);
  for (int t : {1, 10, 500, 1000}) {
    const Tensor back = DdimStep(ForwardDiffuse(x0, t, eps, s), t, 0, eps, s, 0.0, nullptr);
    for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_NEAR(back.data[i], x0.data[i], 1e-6) << t;
  }
}

TEST(DdimTest, FullStrideEtaOneMatchesAncestralStep) {
  const NoiseSchedule s = MakeSchedule();
  for (int t : {2, 3, 100, 999, 1000}) {
    const Tensor x = RandomTensor({16}, t);
    const Tensor eps = RandomTensor({16}, t + 7);
    const Tensor z = RandomTensor({16}, t + 13);
    EXPECT_NEAR(DdimSigma(s, t, t - 1, 1.0) / PosteriorSigma(s, t), 1.0, 1e-12);
    const Tensor a = DdimStep(x, t, t - 1, eps, s, 1.0, &z);
    const Tensor b = AncestralStep(x, t, eps, s, PosteriorSigma(s, t), &z);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-9);
  }
}

TEST(DdimTest, SamplerWithFullStridesIsAncestralSampling) {
  const NoiseSchedule s = MakeSchedule(40, 1e-3, 0.1);
  const NoisePredictor f = MakeAnalyticPredictor(s, Tensor({1}, {0.3}), Tensor({1}, {0.04}));
  const Tensor x_T = RandomTensor({32}, 5);
  const Tensor sampled = DdimSample(x_T, f, {}, s, {40, 1.0}, 9);
  Tensor x = x_T;
  for (int k = 0, t = 40; t >= 1; ++k, --t) {
    const Tensor z = SamplerNoise(9, k, x.shape);
    x = AncestralStep(x, t, f.fn(x, t, {}), s, PosteriorSigma(s, t), &z);
  }
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(sampled.data[i], x.data[i], 1e-9);
}

// For Gaussian data every deterministic DDIM step is affine, so the output
// spread follows a closed-form recursion: the deviation from the mean is
// scaled by (sqrt(a a') v0 + sqrt((1 - a)(1 - a'))) / (a v0 + 1 - a) per step.
double DdimOutputStd(const NoiseSchedule& s, int steps, double var0) {
  const auto ts = DdimTimesteps(s.T, steps);
  double sd = 1.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double a = s.alpha_bar_at(ts[k]);
    const double ap = s.alpha_bar_at(k + 1 < ts.size() ? ts[k + 1] : 0);
    sd *= (std::sqrt(a * ap) * var0 + std::sqrt((1 - a) * (1 - ap))) / (a * var0 + 1 - a);
  }
  return sd;
}

TEST(DdimTest, AnalyticPredictorFollowsClosedFormSpread) {
  const NoiseSchedule s = MakeSchedule();
  const NoisePredictor f = MakeAnalyticPredictor(s, Tensor({1}, {0.5}), Tensor({1}, {0.01}));
  const Tensor x_T = RandomTensor({4096}, 3);
  for (int steps : {50, 1000}) {
    const Tensor out = DdimSample(x_T, f, {}, s, {steps, 0.0}, 1);
    const double mean = PairwiseSum(out.data) / out.size();
    double ss = 0;
    for (double v : out.data) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (out.size() - 1));
    EXPECT_NEAR(mean, 0.5, 0.01) << steps;
    EXPECT_NEAR(sd / DdimOutputStd(s, steps, 0.01), 1.0, 0.03) << steps;
  }
  // With every timestep visited the discretization shrinkage is small.
  EXPECT_NEAR(DdimOutputStd(s, 1000, 0.01) / 0.1, 1.0, 0.02);
  const Tensor fine = DdimSample(x_T, f, {}, s, {1000, 0.0}, 1);
  EXPECT_LT(KsStatisticNormal(fine.data, 0.5, 0.1), 1.628 / 64.0);
}

TEST(DdimTest, BatchIsIndependentOfThreadCount) {
  const NoiseSchedule s = MakeSchedule(100);
  const NoisePredictor f = MakeAnalyticPredictor(s, Tensor({1}, {0.0}), Tensor({1}, {1.0}));
  std::vector<Tensor> x_T;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < 6; ++i) {
    x_T.push_back(RandomTensor({10}, 100 + i));
    seeds.push_back(i);
  }
  const auto a = DdimSampleBatch(x_T, f, {}, s, {20, 0.5}, seeds, 1);
  const auto b = DdimSampleBatch(x_T, f, {}, s, {20, 0.5}, seeds, 4);
  EXPECT_EQ(a, b);
}

TEST(DdimTest, ErrorsFromPredictorAndArguments) {
  const NoiseSchedule s = MakeSchedule(20);
  NoisePredictor wrong{[](const Tensor& x, int, const ConditioningContext&) {
    return Tensor({x.size() + 1});
  }};
  EXPECT_PF_ERROR(DdimSample(Tensor({4}), wrong, {}, s, {5, 0.0}, 0),
                  ErrorCode::kPredictorShapeViolation);
  NoisePredictor nan{[](const Tensor& x, int, const ConditioningContext&) {
    return Tensor(x.shape, std::numeric_limits<double>::quiet_NaN());
  }};
  EXPECT_PF_ERROR(DdimSample(Tensor({4}), nan, {}, s, {5, 0.0}, 0), ErrorCode::kNonFiniteState);
  const Tensor x({4});
  EXPECT_PF_ERROR(AncestralStep(x, 5, x, s, 0.1, nullptr), ErrorCode::kMissingNoise);
  EXPECT_PF_ERROR(ForwardDiffuse(x, 21, x, s), ErrorCode::kTimestepOutOfRange);
  EXPECT_PF_ERROR(ForwardDiffuse(x, 0, x, s), ErrorCode::kTimestepOutOfRange);
  EXPECT_PF_ERROR(ForwardDiffuse(x, 1, Tensor({5}), s), ErrorCode::kShapeMismatch);
}

TEST(DdimTest, ConditioningIsPassedThrough) {
  const NoiseSchedule s = MakeSchedule(10);
  ConditioningContext cond;
  cond.prompt = std::vector<double>{1.0, 2.0};
  int calls = 0;
  NoisePredictor f{[&](const Tensor& x, int, const ConditioningContext& c) {
    EXPECT_TRUE(c.prompt.has_value());
    ++calls;
    return Tensor(x.shape);
  }, false};
  DdimSample(Tensor({3}), f, cond, s, {5, 0.0}, 0);
  EXPECT_EQ(calls, 5);
}

TEST(EpsilonLossTest, ValueAndFiniteDifferenceGradient) {
  const Tensor eps = RandomTensor({12}, 1);
  Tensor hat = RandomTensor({12}, 2);
  const TensorLoss l = EpsilonLoss(eps, hat);
  double mse = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) mse += std::pow(hat.data[i] - eps.data[i], 2);
  EXPECT_NEAR(l.loss, mse / 12.0, 1e-12);
  for (std::size_t i = 0; i < hat.size(); ++i) {
    const double h = 1e-6, v = hat.data[i];
    hat.data[i] = v + h;
    const double up = EpsilonLoss(eps, hat).loss;
    hat.data[i] = v - h;
    const double down = EpsilonLoss(eps, hat).loss;
    hat.data[i] = v;
    EXPECT_NEAR(l.grad.data[i], (up - down) / (2 * h), 1e-7);
  }
}

}  // namespace
}  // namespace pf
