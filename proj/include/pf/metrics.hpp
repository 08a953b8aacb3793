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

#ifndef PF_METRICS_HPP_
#define PF_METRICS_HPP_

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pf/image.hpp"
#include "pf/tensor.hpp"

namespace pf {

struct SsimParams {
  int window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

struct ErrorPair {
  double mse = 0.0;
  double mae = 0.0;
};

// Element-wise over all samples. With scale_255 the differences are taken on
// the 0-255 scale.
ErrorPair MseMae(const ImageF32& a, const ImageF32& b, bool scale_255);

// 10 log10(max_val^2 / MSE) with the MSE measured on the 0-255 scale, so
// max_val = 255 is the usual 8-bit PSNR. Identical images give +infinity.
double Psnr(const ImageF32& a, const ImageF32& b, double max_val = 255.0);

// Gaussian-windowed SSIM; per-channel maps averaged over pixels and channels.
double Ssim(const ImageF32& a, const ImageF32& b, const SsimParams& p = {});

// sum_l 1/(H_l W_l) sum_{h,w} || w_l (.) (fx_l(h,w) - fy_l(h,w)) ||_2^2.
// `weights[l]` holds one multiplier per channel of layer l.
double LpipsFromFeatures(const FeatureStack& fx, const FeatureStack& fy,
                         const std::vector<std::vector<double>>& weights);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Coordinates address pixel centers: (0,0) is the top-left pixel and
// (w-1, h-1) the bottom-right one.
struct ProfileLine {
  Point2 start;
  Point2 end;
  int samples = 2;
};

// Bilinear samples at evenly spaced points (endpoints included), channels
// averaged.
std::vector<double> ExtractProfile(const ImageF32& img, const ProfileLine& line);

// Sample Pearson correlation. If exactly one input is constant the
// correlation is reported as 0; both constant raises kDegenerateInput.
double Pearson(const std::vector<double>& u, const std::vector<double>& v);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr int kDefaultBootstrapIterations = 2000;

// Percentile bootstrap of the mean. Quantiles use linear interpolation
// between order statistics.
Interval BootstrapCi(const std::vector<double>& samples, double level,
                     int iterations, std::uint64_t seed);

enum class Direction { kHigherBetter, kLowerBetter };

// One (task, metric) cell: each method's score.
struct RankCell {
  std::string task;
  std::string metric;
  Direction direction = Direction::kHigherBetter;
  std::map<std::string, double> values;
};

// Ranks methods within each cell (1 = best, ties share the mean of their
// ranks) and averages over cells. +inf counts as a regular, extreme value.
std::map<std::string, double> AverageRank(const std::vector<std::string>& methods,
                                          const std::vector<RankCell>& cells);

// One-sample Kolmogorov-Smirnov statistic sup |F_n(x) - F(x)| against a
// normal distribution.
double KsStatisticNormal(std::vector<double> samples, double mean, double stddev);

// ------------------------------------------------------------------ reports

struct ImageMetrics {
  std::string image_id;
  double psnr_db = 0.0;  // +inf when the images are identical
  double ssim = 0.0;
  double mae = 0.0;      // on the 0-255 scale
  std::optional<double> lpips;
  std::vector<double> profile_pcc;

  friend bool operator==(const ImageMetrics&, const ImageMetrics&) = default;
};

struct MetricAggregate {
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int n = 0;               // values entering the mean
  int n_excluded_inf = 0;  // infinite values left out

  friend bool operator==(const MetricAggregate&, const MetricAggregate&) = default;
};

struct MetricReport {
  std::vector<ImageMetrics> per_image;
  // Keyed by metric name: psnr_db, ssim, mae and, when present, lpips.
  std::map<std::string, MetricAggregate> aggregates;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct AggregateOptions {
  double level = 0.95;
  int iterations = kDefaultBootstrapIterations;
  std::uint64_t seed = 0;
};

// Means and bootstrap CIs per metric. Infinite values are excluded and
// counted; if every value is infinite the aggregate is reported as infinite.
// The interval is widened to contain the mean when the percentile bootstrap
// does not.
MetricAggregate AggregateValues(const std::vector<double>& values,
                                const AggregateOptions& options);
MetricReport BuildMetricReport(std::vector<ImageMetrics> per_image,
                               const AggregateOptions& options);

nlohmann::json MetricReportToJson(const MetricReport& report);
MetricReport MetricReportFromJson(const nlohmann::json& j);

// Columns image_id, psnr_db, ssim, mae, lpips; then one row per aggregate
// statistic in "mean (lo, hi)" form.
std::string MetricReportToCsv(const MetricReport& report);

// Fixed 6-decimal rendering; infinities print as "inf" / "-inf".
std::string FormatNumber(double value);

// JSON has no infinity: non-finite numbers travel as strings.
nlohmann::json NumberToJson(double value);
double NumberFromJson(const nlohmann::json& j);

}  // namespace pf

#endif  // PF_METRICS_HPP_
