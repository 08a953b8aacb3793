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

#include "pf/metrics.hpp"
#include "test_util.hpp"

namespace pf {
namespace {

using ::pf::testing::RandomImage;

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(PsnrTest, ClosedForms) {
  const ImageF32 a(16, 16, 3, 100.0f / 255.0f);
  const ImageF32 b(16, 16, 3, 110.0f / 255.0f);
  const ImageF32 c(16, 16, 3, 105.0f / 255.0f);
  EXPECT_NEAR(Psnr(a, b), 28.130803608679106, 1e-4);
  EXPECT_NEAR(Psnr(a, c) - Psnr(a, b), 6.020599913279624, 1e-4);
  EXPECT_EQ(Psnr(a, a), kInf);
}

TEST(PsnrTest, ShapeMismatch) {
  EXPECT_PF_ERROR(Psnr(ImageF32(4, 4, 1), ImageF32(4, 5, 1)), ErrorCode::kShapeMismatch);
}

TEST(MseMaeTest, Scales) {
  const ImageF32 a(2, 1, 1, {0.0f, 0.0f});
  const ImageF32 b(2, 1, 1, {1.0f, 0.5f});
  const ErrorPair unit = MseMae(a, b, false);
  EXPECT_DOUBLE_EQ(unit.mae, 0.75);
  EXPECT_DOUBLE_EQ(unit.mse, 0.625);
  EXPECT_NEAR(MseMae(a, b, true).mae, 0.75 * 255.0, 1e-4);
}

TEST(SsimTest, IdenticalIsOneAndSymmetric) {
  const ImageF32 a = RandomImage(32, 24, 3, 1);
  const ImageF32 b = RandomImage(32, 24, 3, 2);
  EXPECT_NEAR(Ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(Ssim(a, b), Ssim(b, a), 1e-12);
  EXPECT_LT(Ssim(a, b), 0.1);
}

TEST(SsimTest, ConstantImagesReduceToLuminanceTerm) {
  // Flat images: variances vanish, SSIM = (2 mx my + c1) / (mx^2 + my^2 + c1).
  const ImageF32 a(16, 16, 1, 0.2f);
  const ImageF32 b(16, 16, 1, 0.4f);
  const double mx = static_cast<double>(0.2f), my = static_cast<double>(0.4f);
  const double c1 = 1e-4;
  EXPECT_NEAR(Ssim(a, b), (2 * mx * my + c1) / (mx * mx + my * my + c1), 1e-9);
}

TEST(SsimTest, SmallImageRejected) {
  EXPECT_PF_ERROR(Ssim(ImageF32(10, 20, 1), ImageF32(10, 20, 1)),
                  ErrorCode::kImageSmallerThanWindow);
}

FeatureLayer Layer(int h, int w, int c, std::vector<double> data) {
  return {h, w, c, std::move(data)};
}

TEST(LpipsTest, HandComputedTwoLayers) {
  // Layer 0: 1x2 positions, 2 channels. Layer 1: 1x1, 1 channel.
  const FeatureStack fx = {Layer(1, 2, 2, {1, 2, 3, 4}), Layer(1, 1, 1, {5})};
  const FeatureStack fy = {Layer(1, 2, 2, {1, 0, 0, 4}), Layer(1, 1, 1, {2})};
  const std::vector<std::vector<double>> w = {{1.0, 0.5}, {2.0}};
  // Layer 0: ((0)^2 + (0.5*2)^2 + (3)^2 + 0) / 2 = 5; layer 1: (2*3)^2 = 36.
  EXPECT_NEAR(LpipsFromFeatures(fx, fy, w), 41.0, 1e-12);
  EXPECT_PF_ERROR(LpipsFromFeatures({}, {}, {}), ErrorCode::kEmptyLayerList);
  EXPECT_PF_ERROR(LpipsFromFeatures(fx, fy, {{1.0}, {2.0}}), ErrorCode::kShapeMismatch);
}

TEST(ProfileTest, BilinearSamplesAlongLine) {
  ImageF32 img(3, 1, 1, {0.0f, 0.5f, 1.0f});
  const auto p = ExtractProfile(img, {{0, 0}, {2, 0}, 5});
  ASSERT_EQ(p.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(p[i], 0.25 * i, 1e-7);
  EXPECT_PF_ERROR(ExtractProfile(img, {{0, 0}, {3, 0}, 2}), ErrorCode::kOutOfBounds);
}

TEST(PearsonTest, OracleAndDegenerateCases) {
  EXPECT_NEAR(Pearson({1, 2, 3, 4}, {2, 4, 5, 4}), 0.7181848464596079, 1e-12);
  EXPECT_NEAR(Pearson({1, 2, 3}, {3, 2, 1}), -1.0, 1e-12);
  EXPECT_EQ(Pearson({1, 1, 1}, {1, 2, 3}), 0.0);
  EXPECT_PF_ERROR(Pearson({1, 1}, {2, 2}), ErrorCode::kDegenerateInput);
  EXPECT_PF_ERROR(Pearson({1, 2}, {1, 2, 3}), ErrorCode::kInvalidArgument);
}

TEST(BootstrapTest, ContainsMeanAndIsDeterministic) {
  std::vector<double> v;
  CounterRng rng(4);
  for (int i = 0; i < 50; ++i) v.push_back(rng.Normal());
  const Interval a = BootstrapCi(v, 0.95, 1000, 1);
  const Interval b = BootstrapCi(v, 0.95, 1000, 1);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  EXPECT_LT(a.lo, a.hi);
  const Interval c = BootstrapCi({2.5, 2.5, 2.5}, 0.95, 100, 0);
  EXPECT_EQ(c.lo, 2.5);
  EXPECT_EQ(c.hi, 2.5);
  EXPECT_PF_ERROR(BootstrapCi({}, 0.95, 10, 0), ErrorCode::kEmptyInput);
  EXPECT_PF_ERROR(BootstrapCi({1.0}, 1.5, 10, 0), ErrorCode::kInvalidArgument);
}

TEST(RankTest, TiesShareMeanRank) {
  const std::vector<RankCell> cells = {
      {"t", "psnr", Direction::kHigherBetter, {{"a", 30}, {"b", 30}, {"c", 20}}},
      {"t", "mae", Direction::kLowerBetter, {{"a", 1}, {"b", 2}, {"c", 3}}},
  };
  const auto r = AverageRank({"a", "b", "c"}, cells);
  EXPECT_DOUBLE_EQ(r.at("a"), (1.5 + 1) / 2);
  EXPECT_DOUBLE_EQ(r.at("b"), (1.5 + 2) / 2);
  EXPECT_DOUBLE_EQ(r.at("c"), 3.0);
}

TEST(RankTest, InfinityRanksFirstWhenHigherIsBetter) {
  const std::vector<RankCell> cells = {
      {"t", "psnr", Direction::kHigherBetter, {{"a", kInf}, {"b", 40}}}};
  EXPECT_DOUBLE_EQ(AverageRank({"a", "b"}, cells).at("a"), 1.0);
}

TEST(RankTest, MissingCellAndEmptyInput) {
  const std::vector<RankCell> cells = {{"t", "psnr", Direction::kHigherBetter, {{"a", 1}}}};
  EXPECT_PF_ERROR(AverageRank({"a", "b"}, cells), ErrorCode::kMissingCell);
  EXPECT_PF_ERROR(AverageRank({"a"}, {}), ErrorCode::kEmptyInput);
}

TEST(AggregateTest, InfinitiesAreExcludedAndCounted) {
  const MetricAggregate a = AggregateValues({kInf, 10.0, 20.0}, {});
  EXPECT_DOUBLE_EQ(a.mean, 15.0);
  EXPECT_EQ(a.n, 2);
  EXPECT_EQ(a.n_excluded_inf, 1);
  EXPECT_LE(a.ci_lo, a.mean);
  EXPECT_GE(a.ci_hi, a.mean);
  const MetricAggregate all = AggregateValues({kInf, kInf}, {});
  EXPECT_EQ(all.mean, kInf);
  EXPECT_EQ(all.n, 0);
  EXPECT_EQ(all.n_excluded_inf, 2);
}

TEST(ReportTest, JsonRoundTripAndCsvShape) {
  std::vector<ImageMetrics> per = {{"b", kInf, 1.0, 0.0, std::nullopt, {}},
                                   {"a", 30.5, 0.9, 2.25, std::nullopt, {0.5}}};
  const MetricReport r = BuildMetricReport(per, {0.95, 200, 3});
  EXPECT_EQ(MetricReportFromJson(nlohmann::json::parse(MetricReportToJson(r).dump())), r);
  EXPECT_EQ(r.aggregates.count("lpips"), 0u);
  const std::string csv = MetricReportToCsv(r);
  EXPECT_EQ(csv.rfind("image_id,psnr_db,ssim,mae,lpips\n", 0), 0u);
  EXPECT_NE(csv.find("inf"), std::string::npos);
  EXPECT_EQ(FormatNumber(1.0 / 3.0), "0.333333");
  EXPECT_EQ(FormatNumber(-kInf), "-inf");
}

TEST(KsTest, StatisticOfKnownSamples) {
  // Single sample at the median: sup distance is 1/2.
  EXPECT_NEAR(KsStatisticNormal({0.0}, 0.0, 1.0), 0.5, 1e-12);
  std::vector<double> v;
  CounterRng rng(8);
  for (int i = 0; i < 4096; ++i) v.push_back(2.0 + 3.0 * rng.Normal());
  EXPECT_LT(KsStatisticNormal(v, 2.0, 3.0), 1.628 / 64.0);
  EXPECT_GT(KsStatisticNormal(v, 2.5, 3.0), 1.628 / 64.0);
}

}  // namespace
}  // namespace pf
