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
#include <numeric>

#include "pf/degrade.hpp"
#include "pf/tensor.hpp"
#include "test_util.hpp"

namespace pf {
namespace {

using ::pf::testing::RandomImage;

double KernelSum(const BlurKernel& k) {
  return std::accumulate(k.weights.begin(), k.weights.end(), 0.0);
}

// exp(-0.5 d^T Sigma^-1 d), Sigma = R diag(s1^2, s2^2) R^T, normalized.
BlurKernel DirectKernel(const BlurParams& p) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  const double a11 = c * c * p.sigma1 * p.sigma1 + s * s * p.sigma2 * p.sigma2;
  const double a22 = s * s * p.sigma1 * p.sigma1 + c * c * p.sigma2 * p.sigma2;
  const double a12 = c * s * (p.sigma1 * p.sigma1 - p.sigma2 * p.sigma2);
  const double det = a11 * a22 - a12 * a12;
  BlurKernel k{p.size, std::vector<double>(p.size * p.size)};
  const int r = p.size / 2;
  double total = 0;
  for (int row = 0; row < p.size; ++row) {
    for (int col = 0; col < p.size; ++col) {
      const double x = col - r, y = row - r;
      const double q = (a22 * x * x - 2 * a12 * x * y + a11 * y * y) / det;
      k.weights[row * p.size + col] = std::exp(-0.5 * q);
      total += k.weights[row * p.size + col];
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

TEST(KernelTest, ThreeByThreeUnitSigmaFixture) {
  const BlurKernel k = BuildGaussianKernel({3, 1.0, 1.0, 0.0});
  EXPECT_NEAR(k.at(0, 0), 0.075113607954111497, 1e-12);
  EXPECT_NEAR(k.at(0, 1), 0.12384140315297394, 1e-12);
  EXPECT_NEAR(k.at(1, 1), 0.20417995557165805, 1e-12);
  EXPECT_NEAR(KernelSum(k), 1.0, 1e-12);
}

TEST(KernelTest, AnisotropicMatchesDirectFormula) {
  for (double theta : {0.0, 0.3, 1.2, 2.9}) {
    const BlurParams p{9, 3.0, 1.2, theta};
    const BlurKernel k = BuildGaussianKernel(p);
    const BlurKernel d = DirectKernel(p);
    for (std::size_t i = 0; i < k.weights.size(); ++i) EXPECT_NEAR(k.weights[i], d.weights[i], 1e-12);
  }
}

TEST(KernelTest, RotationByHalfTurnOnAxisSwapsRowsAndColumns) {
  // theta = pi/2 swaps the roles of sigma1 and sigma2.
  const BlurKernel a = BuildGaussianKernel({7, 2.5, 1.0, 0.0});
  const BlurKernel b = BuildGaussianKernel({7, 2.5, 1.0, M_PI / 2});
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 7; ++c) EXPECT_NEAR(a.at(r, c), b.at(c, r), 1e-12);
  }
  // The long axis is horizontal at theta = 0.
  EXPECT_GT(a.at(3, 5), a.at(5, 3));
}

TEST(KernelTest, IsotropicIsThetaInvariant) {
  const BlurKernel ref = BuildGaussianKernel({11, 2.5, 2.5, 0.0});
  for (double theta : {0.4, 1.0, 2.2, 3.1}) {
    const BlurKernel k = BuildGaussianKernel({11, 2.5, 2.5, theta});
    for (std::size_t i = 0; i < k.weights.size(); ++i) EXPECT_NEAR(k.weights[i], ref.weights[i], 1e-12);
  }
}

TEST(KernelTest, RejectsInvalidParameters) {
  EXPECT_PF_ERROR(BuildGaussianKernel({4, 1.0, 1.0, 0.0}), ErrorCode::kInvalidArgument);
  EXPECT_PF_ERROR(BuildGaussianKernel({1, 1.0, 1.0, 0.0}), ErrorCode::kInvalidArgument);
  EXPECT_PF_ERROR(BuildGaussianKernel({7, 0.0, 1.0, 0.0}), ErrorCode::kSingularCovariance);
  EXPECT_PF_ERROR(BuildGaussianKernel({7, 1.0, -1.0, 0.0}), ErrorCode::kSingularCovariance);
}

int Reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

TEST(ConvolveTest, MatchesNestedLoopReference) {
  const ImageF32 img = RandomImage(23, 17, 3, 4);
  const BlurKernel k = BuildGaussianKernel({7, 2.0, 1.0, 0.7});
  const ImageF32 out = Convolve(img, k);
  const int r = k.size / 2;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        double acc = 0;
        for (int j = -r; j <= r; ++j) {
          for (int i = -r; i <= r; ++i) {
            acc += k.at(j + r, i + r) *
                   img.at(Reflect101(x + i, img.width()), Reflect101(y + j, img.height()), c);
          }
        }
        EXPECT_NEAR(out.at(x, y, c), acc, 1e-6);
      }
    }
  }
}

TEST(ConvolveTest, PreservesConstants) {
  const ImageF32 img(12, 12, 1, 0.25f);
  const ImageF32 out = Convolve(img, BuildGaussianKernel({15, 3.5, 3.5, 0.0}));
  for (float v : out.data()) EXPECT_NEAR(v, 0.25f, 1e-6);
}

TEST(ResampleTest, AreaDownscaleAveragesBlocks) {
  ImageF32 img(4, 2, 1, {0.f, 1.f, 2.f, 3.f, 4.f, 5.f, 6.f, 7.f});
  const ImageF32 out = Resample(img, 2, 1, ResampleMethod::kArea);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0), (0 + 1 + 4 + 5) / 4.0f);
  EXPECT_FLOAT_EQ(out.at(1, 0, 0), (2 + 3 + 6 + 7) / 4.0f);
}

TEST(ResampleTest, ConstantsSurviveEveryMethod) {
  const ImageF32 img(16, 12, 3, 0.4f);
  for (auto m : {ResampleMethod::kArea, ResampleMethod::kBilinear, ResampleMethod::kBicubic}) {
    for (auto [w, h] : {std::pair{8, 6}, std::pair{32, 24}, std::pair{5, 7}}) {
      const ImageF32 out = Resample(img, w, h, m);
      ASSERT_EQ(out.width(), w);
      for (float v : out.data()) EXPECT_NEAR(v, 0.4f, 1e-6) << ResampleMethodName(m);
    }
  }
}

TEST(ResampleTest, BilinearHalvingAveragesPairs) {
  // Half-pixel centers put each output sample midway between two inputs.
  ImageF32 img(4, 1, 1, {0.f, 1.f, 2.f, 3.f});
  const ImageF32 out = Resample(img, 2, 1, ResampleMethod::kBilinear);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0), 0.5f);
  EXPECT_FLOAT_EQ(out.at(1, 0, 0), 2.5f);
}

TEST(ResampleTest, BicubicUpscaleReproducesLinearRamps) {
  ImageF32 img(16, 1, 1);
  for (int x = 0; x < 16; ++x) img.at(x, 0, 0) = 0.05f * x;
  const ImageF32 out = Resample(img, 32, 1, ResampleMethod::kBicubic);
  // Interior samples at source coordinate (x + 0.5) / 2 - 0.5.
  for (int x = 4; x < 28; ++x) {
    EXPECT_NEAR(out.at(x, 0, 0), 0.05 * ((x + 0.5) / 2.0 - 0.5), 1e-6);
  }
}

TEST(ResampleTest, ReplicateUpscale) {
  ImageF32 img(2, 1, 1, {0.1f, 0.9f});
  const ImageF32 out = ReplicateUpscale(img, 3);
  ASSERT_EQ(out.width(), 6);
  ASSERT_EQ(out.height(), 3);
  EXPECT_EQ(out.at(2, 2, 0), 0.1f);
  EXPECT_EQ(out.at(3, 0, 0), 0.9f);
}

TEST(NoiseTest, GaussianStdAndDeterminism) {
  const ImageF32 img(256, 256, 3, 0.5f);
  const ImageF32 a = AddGaussianNoise(img, 21.0, true, 9);
  EXPECT_EQ(a, AddGaussianNoise(img, 21.0, true, 9));
  EXPECT_NE(a, AddGaussianNoise(img, 21.0, true, 10));
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.data()[i] - 0.5;
  const double mean = PairwiseSum(d) / d.size();
  for (double& v : d) v = (v - mean) * (v - mean);
  EXPECT_NEAR(std::sqrt(PairwiseSum(d) / d.size()), 21.0 / 255.0, 0.01 * 21.0 / 255.0 * 3);
}

TEST(NoiseTest, SharedDrawAcrossChannels) {
  const ImageF32 img(8, 8, 3, 0.5f);
  const ImageF32 a = AddGaussianNoise(img, 30.0, false, 1);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      EXPECT_EQ(a.at(x, y, 0), a.at(x, y, 1));
      EXPECT_EQ(a.at(x, y, 0), a.at(x, y, 2));
    }
  }
}

TEST(NoiseTest, PoissonVarianceScalesWithIntensity) {
  const ImageF32 img(500, 400, 1, 0.5f);
  const ImageF32 a = AddPoissonNoise(img, 1000.0, 3);
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.data()[i] - 0.5;
  const double mean = PairwiseSum(d) / d.size();
  for (double& v : d) v = (v - mean) * (v - mean);
  EXPECT_NEAR(PairwiseSum(d) / d.size() / (0.5 / 1000.0), 1.0, 0.05);
  EXPECT_NEAR(mean, 0.0, 1e-3);
}

DegradationSpec CoupledSpec(std::uint64_t seed) {
  DegradationSpec spec;
  spec.seed = seed;
  spec.steps.push_back(BlurStep{{7, 2.0, 1.0, 0.0}, true});
  spec.steps.push_back(DownscaleStep{2, ResampleMethod::kBicubic, true});
  spec.steps.push_back(NoiseStep{{10.0, std::nullopt, true}, true});
  return spec;
}

TEST(PipelineTest, DeterministicAndReplayableFromProvenance) {
  const ImageF32 img = RandomImage(40, 30, 3, 2);
  const DegradeResult a = DegradePipeline(img, CoupledSpec(123));
  const DegradeResult b = DegradePipeline(img, CoupledSpec(123));
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.image.width(), 20);
  EXPECT_EQ(a.image.height(), 15);
  ASSERT_EQ(a.provenance.steps.size(), 3u);
  const auto* blur = std::get_if<BlurStep>(&a.provenance.steps[0].resolved);
  ASSERT_NE(blur, nullptr);
  EXPECT_FALSE(blur->random_theta);
  EXPECT_GE(blur->params.theta, 0.0);
  EXPECT_LT(blur->params.theta, M_PI);
  const auto* noise = std::get_if<NoiseStep>(&a.provenance.steps[2].resolved);
  ASSERT_TRUE(noise && noise->params.poisson_lambda);
  EXPECT_GE(*noise->params.poisson_lambda, kLambdaMin);
  EXPECT_LE(*noise->params.poisson_lambda, kLambdaMax);

  const nlohmann::json j = ProvenanceToJson(a.provenance);
  const ProvenanceRecord back = ProvenanceFromJson(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(DegradePipeline(img, back.ToSpec()).image, a.image);
  EXPECT_NE(DegradePipeline(img, CoupledSpec(124)).image, a.image);
}

TEST(PipelineTest, EmptySpecIsIdentityAndTooSmallFails) {
  const ImageF32 img = RandomImage(8, 8, 1, 3);
  EXPECT_EQ(DegradePipeline(img, {}).image, img);
  DegradationSpec spec;
  spec.steps.push_back(DownscaleStep{16, ResampleMethod::kArea, false});
  EXPECT_PF_ERROR(DegradePipeline(img, spec), ErrorCode::kInvalidArgument);
}

TEST(PipelineTest, SpecJsonRoundTrip) {
  const DegradationSpec spec = CoupledSpec(77);
  const DegradationSpec back = SpecFromJson(nlohmann::json::parse(SpecToJson(spec).dump()));
  EXPECT_EQ(SpecToJson(back), SpecToJson(spec));
  EXPECT_EQ(TotalDownscale(spec), 2);
  EXPECT_PF_ERROR(StepFromJson({{"type", "sharpen"}}), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace pf
