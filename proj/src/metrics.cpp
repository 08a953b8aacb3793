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

#include "pf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pf/error.hpp"
#include "pf/rng.hpp"

namespace pf {
namespace {

void CheckSameShape(const ImageF32& a, const ImageF32& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kShapeMismatch,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                    "x" + std::to_string(a.channels()) + " vs " +
                    std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + "x" +
                    std::to_string(b.channels()));
  }
}

int Reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<double> GaussianWindow1d(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const int r = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - r;
    g[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable filtering with reflect-101 borders.
std::vector<double> FilterPlane(const std::vector<double>& plane, int w, int h,
                                const std::vector<double>& g) {
  const int r = static_cast<int>(g.size()) / 2;
  std::vector<double> tmp(plane.size());
  std::vector<double> out(plane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        acc += g[k + r] * plane[static_cast<std::size_t>(y) * w + Reflect101(x + k, w)];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        acc += g[k + r] * tmp[static_cast<std::size_t>(Reflect101(y + k, h)) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

double Quantile(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double Mean(std::span<const double> values) {
  return PairwiseSum(values) / static_cast<double>(values.size());
}

}  // namespace

ErrorPair MseMae(const ImageF32& a, const ImageF32& b, bool scale_255) {
  CheckSameShape(a, b);
  if (a.empty()) throw Error(ErrorCode::kEmptyInput, "empty images");
  const double scale = scale_255 ? 255.0 : 1.0;
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> sq(da.size());
  std::vector<double> ab(da.size());
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = (static_cast<double>(da[i]) - db[i]) * scale;
    sq[i] = d * d;
    ab[i] = std::fabs(d);
  }
  return {Mean(sq), Mean(ab)};
}

double Psnr(const ImageF32& a, const ImageF32& b, double max_val) {
  const double mse = MseMae(a, b, true).mse;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double Ssim(const ImageF32& a, const ImageF32& b, const SsimParams& p) {
  CheckSameShape(a, b);
  if (p.window < 3 || p.window % 2 == 0 || !(p.window_sigma > 0.0) ||
      !(p.k1 > 0.0) || !(p.k2 > 0.0) || !(p.data_range > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid SSIM parameters");
  }
  if (a.width() < p.window || a.height() < p.window) {
    throw Error(ErrorCode::kImageSmallerThanWindow,
                "image " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " smaller than window " +
                    std::to_string(p.window));
  }
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  const auto g = GaussianWindow1d(p.window, p.window_sigma);
  const int w = a.width();
  const int h = a.height();
  const std::size_t n = a.plane_size();

  std::vector<double> map;
  map.reserve(n * a.channels());
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (int c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = pa[i];
      y[i] = pb[i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = FilterPlane(x, w, h, g);
    const auto my = FilterPlane(y, w, h, g);
    const auto mxx = FilterPlane(xx, w, h, g);
    const auto myy = FilterPlane(yy, w, h, g);
    const auto mxy = FilterPlane(xy, w, h, g);
    for (std::size_t i = 0; i < n; ++i) {
      const double var_x = mxx[i] - mx[i] * mx[i];
      const double var_y = myy[i] - my[i] * my[i];
      const double cov = mxy[i] - mx[i] * my[i];
      const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
      const double den =
          (mx[i] * mx[i] + my[i] * my[i] + c1) * (var_x + var_y + c2);
      map.push_back(num / den);
    }
  }
  return Mean(map);
}

double LpipsFromFeatures(const FeatureStack& fx, const FeatureStack& fy,
                         const std::vector<std::vector<double>>& weights) {
  if (fx.empty()) throw Error(ErrorCode::kEmptyLayerList, "no feature layers");
  if (fx.size() != fy.size() || weights.size() != fx.size()) {
    throw Error(ErrorCode::kShapeMismatch, "layer counts differ");
  }
  std::vector<double> per_layer;
  for (std::size_t l = 0; l < fx.size(); ++l) {
    const FeatureLayer& a = fx[l];
    const FeatureLayer& b = fy[l];
    const std::size_t volume = static_cast<std::size_t>(a.h) * a.w * a.c;
    if (a.h != b.h || a.w != b.w || a.c != b.c || a.data.size() != volume ||
        b.data.size() != volume || a.h < 1 || a.w < 1 || a.c < 1) {
      throw Error(ErrorCode::kShapeMismatch,
                  "feature layer " + std::to_string(l) + " shapes differ");
    }
    if (weights[l].size() != static_cast<std::size_t>(a.c)) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layer " + std::to_string(l) + " weight count != channels");
    }
    std::vector<double> terms(volume);
    for (std::size_t i = 0; i < volume; ++i) {
      const double d = weights[l][i % a.c] * (a.data[i] - b.data[i]);
      terms[i] = d * d;
    }
    per_layer.push_back(PairwiseSum(terms) / (static_cast<double>(a.h) * a.w));
  }
  return PairwiseSum(per_layer);
}

std::vector<double> ExtractProfile(const ImageF32& img, const ProfileLine& line) {
  if (line.samples < 2) {
    throw Error(ErrorCode::kInvalidArgument, "profile needs >= 2 samples");
  }
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;
  for (const Point2& p : {line.start, line.end}) {
    if (!(p.x >= 0.0 && p.x <= max_x && p.y >= 0.0 && p.y <= max_y)) {
      throw Error(ErrorCode::kOutOfBounds, "profile endpoint outside image");
    }
  }
  std::vector<double> out(static_cast<std::size_t>(line.samples));
  const double steps = line.samples - 1;
  for (int k = 0; k < line.samples; ++k) {
    const double px = line.start.x + (line.end.x - line.start.x) * k / steps;
    const double py = line.start.y + (line.end.y - line.start.y) * k / steps;
    const int x0 = std::min(static_cast<int>(std::floor(px)), img.width() - 1);
    const int y0 = std::min(static_cast<int>(std::floor(py)), img.height() - 1);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = px - x0;
    const double fy = py - y0;
    double sum = 0.0;
    for (int c = 0; c < img.channels(); ++c) {
      sum += (1.0 - fx) * (1.0 - fy) * img.at(x0, y0, c) +
             fx * (1.0 - fy) * img.at(x1, y0, c) +
             (1.0 - fx) * fy * img.at(x0, y1, c) + fx * fy * img.at(x1, y1, c);
    }
    out[k] = sum / img.channels();
  }
  return out;
}

double Pearson(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size() || u.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "pearson needs two equal-length vectors of length >= 2");
  }
  const auto constant = [](const std::vector<double>& s) {
    return std::all_of(s.begin(), s.end(), [&](double x) { return x == s[0]; });
  };
  const bool cu = constant(u);
  const bool cv = constant(v);
  if (cu && cv) throw Error(ErrorCode::kDegenerateInput, "both inputs constant");
  if (cu || cv) return 0.0;
  const double mu = Mean(u);
  const double mv = Mean(v);
  std::vector<double> suv(u.size()), suu(u.size()), svv(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu;
    const double dv = v[i] - mv;
    suv[i] = du * dv;
    suu[i] = du * du;
    svv[i] = dv * dv;
  }
  const double r = PairwiseSum(suv) / std::sqrt(PairwiseSum(suu) * PairwiseSum(svv));
  return std::clamp(r, -1.0, 1.0);
}

Interval BootstrapCi(const std::vector<double>& samples, double level,
                     int iterations, std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no samples");
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "level must lie in (0, 1)");
  }
  if (iterations < 1) throw Error(ErrorCode::kInvalidArgument, "iterations < 1");
  if (std::all_of(samples.begin(), samples.end(),
                  [&](double s) { return s == samples[0]; })) {
    return {samples[0], samples[0]};
  }
  CounterRng rng(seed);
  const std::size_t n = samples.size();
  std::vector<double> means(static_cast<std::size_t>(iterations));
  std::vector<double> draw(n);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) draw[i] = samples[rng.UniformInt(n)];
    means[it] = Mean(draw);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {Quantile(means, tail), Quantile(means, 1.0 - tail)};
}

std::map<std::string, double> AverageRank(const std::vector<std::string>& methods,
                                          const std::vector<RankCell>& cells) {
  if (methods.empty() || cells.empty()) {
    throw Error(ErrorCode::kEmptyInput, "ranking needs methods and cells");
  }
  std::map<std::string, double> total;
  for (const auto& m : methods) total[m] = 0.0;
  for (const RankCell& cell : cells) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& m : methods) {
      const auto it = cell.values.find(m);
      if (it == cell.values.end() || std::isnan(it->second)) {
        throw Error(ErrorCode::kMissingCell,
                    "no " + cell.metric + " value for '" + m + "' on task '" +
                        cell.task + "'");
      }
      // Negate lower-better scores so that larger always wins.
      scored.emplace_back(cell.direction == Direction::kHigherBetter ? it->second
                                                                     : -it->second,
                          m);
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& l, const auto& r) { return l.first > r.first; });
    for (std::size_t i = 0; i < scored.size();) {
      std::size_t j = i;
      while (j + 1 < scored.size() && scored[j + 1].first == scored[i].first) ++j;
      // Positions i..j tie; ranks are 1-based.
      const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) total[scored[k].second] += rank;
      i = j + 1;
    }
  }
  for (auto& [m, sum] : total) sum /= static_cast<double>(cells.size());
  return total;
}

// ------------------------------------------------------------------ reports

MetricAggregate AggregateValues(const std::vector<double>& values,
                                const AggregateOptions& options) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "no metric values");
  MetricAggregate agg;
  std::vector<double> finite;
  for (const double v : values) {
    if (std::isinf(v)) {
      ++agg.n_excluded_inf;
    } else if (std::isnan(v)) {
      throw Error(ErrorCode::kNonFiniteTerm, "NaN metric value");
    } else {
      finite.push_back(v);
    }
  }
  agg.n = static_cast<int>(finite.size());
  if (finite.empty()) {
    const double inf = std::numeric_limits<double>::infinity();
    agg.mean = agg.ci_lo = agg.ci_hi = inf;
    return agg;
  }
  agg.mean = Mean(finite);
  const Interval ci = BootstrapCi(finite, options.level, options.iterations, options.seed);
  agg.ci_lo = std::min(ci.lo, agg.mean);
  agg.ci_hi = std::max(ci.hi, agg.mean);
  return agg;
}

MetricReport BuildMetricReport(std::vector<ImageMetrics> per_image,
                               const AggregateOptions& options) {
  if (per_image.empty()) throw Error(ErrorCode::kEmptyInput, "no images in report");
  MetricReport report;
  report.per_image = std::move(per_image);
  std::vector<double> psnr, ssim, mae, lpips;
  bool all_lpips = true;
  for (const auto& m : report.per_image) {
    psnr.push_back(m.psnr_db);
    ssim.push_back(m.ssim);
    mae.push_back(m.mae);
    if (m.lpips) {
      lpips.push_back(*m.lpips);
    } else {
      all_lpips = false;
    }
  }
  const auto with_seed = [&](const char* name) {
    AggregateOptions o = options;
    o.seed = DeriveSeed(options.seed, HashString(name));
    return o;
  };
  report.aggregates["psnr_db"] = AggregateValues(psnr, with_seed("psnr_db"));
  report.aggregates["ssim"] = AggregateValues(ssim, with_seed("ssim"));
  report.aggregates["mae"] = AggregateValues(mae, with_seed("mae"));
  if (all_lpips) report.aggregates["lpips"] = AggregateValues(lpips, with_seed("lpips"));
  return report;
}

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

nlohmann::json NumberToJson(double value) {
  if (std::isfinite(value)) return value;
  return FormatNumber(value);
}

double NumberFromJson(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::kMalformedFile, "expected a number, got " + j.dump());
}

nlohmann::json MetricReportToJson(const MetricReport& report) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& m : report.per_image) {
    nlohmann::json row = {{"image_id", m.image_id},
                          {"psnr_db", NumberToJson(m.psnr_db)},
                          {"ssim", NumberToJson(m.ssim)},
                          {"mae", NumberToJson(m.mae)}};
    if (m.lpips) row["lpips"] = NumberToJson(*m.lpips);
    if (!m.profile_pcc.empty()) {
      nlohmann::json pcc = nlohmann::json::array();
      for (const double v : m.profile_pcc) pcc.push_back(NumberToJson(v));
      row["profile_pcc"] = pcc;
    }
    images.push_back(row);
  }
  nlohmann::json aggregates = nlohmann::json::object();
  for (const auto& [name, a] : report.aggregates) {
    aggregates[name] = {{"mean", NumberToJson(a.mean)},
                        {"ci_lo", NumberToJson(a.ci_lo)},
                        {"ci_hi", NumberToJson(a.ci_hi)},
                        {"n", a.n},
                        {"n_excluded_inf", a.n_excluded_inf}};
  }
  return {{"per_image", images}, {"aggregates", aggregates}};
}

MetricReport MetricReportFromJson(const nlohmann::json& j) {
  MetricReport report;
  try {
    for (const auto& row : j.at("per_image")) {
      ImageMetrics m;
      m.image_id = row.at("image_id").get<std::string>();
      m.psnr_db = NumberFromJson(row.at("psnr_db"));
      m.ssim = NumberFromJson(row.at("ssim"));
      m.mae = NumberFromJson(row.at("mae"));
      if (row.contains("lpips")) m.lpips = NumberFromJson(row["lpips"]);
      if (row.contains("profile_pcc")) {
        for (const auto& v : row["profile_pcc"]) m.profile_pcc.push_back(NumberFromJson(v));
      }
      report.per_image.push_back(std::move(m));
    }
    for (const auto& [name, a] : j.at("aggregates").items()) {
      report.aggregates[name] = {NumberFromJson(a.at("mean")),
                                 NumberFromJson(a.at("ci_lo")),
                                 NumberFromJson(a.at("ci_hi")), a.at("n").get<int>(),
                                 a.at("n_excluded_inf").get<int>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("metric report: ") + e.what());
  }
  return report;
}

std::string MetricReportToCsv(const MetricReport& report) {
  std::ostringstream out;
  out << "image_id,psnr_db,ssim,mae,lpips\n";
  for (const auto& m : report.per_image) {
    out << m.image_id << ',' << FormatNumber(m.psnr_db) << ','
        << FormatNumber(m.ssim) << ',' << FormatNumber(m.mae) << ','
        << (m.lpips ? FormatNumber(*m.lpips) : "") << '\n';
  }
  const auto cell = [&](const char* name) -> std::string {
    const auto it = report.aggregates.find(name);
    if (it == report.aggregates.end()) return "";
    const auto& a = it->second;
    return '"' + FormatNumber(a.mean) + " (" + FormatNumber(a.ci_lo) + ", " +
           FormatNumber(a.ci_hi) + ")\"";
  };
  out << "mean (CI)," << cell("psnr_db") << ',' << cell("ssim") << ','
      << cell("mae") << ',' << cell("lpips") << '\n';
  return out.str();
}

double KsStatisticNormal(std::vector<double> samples, double mean, double stddev) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no samples");
  if (!(stddev > 0.0)) throw Error(ErrorCode::kInvalidArgument, "stddev must be > 0");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = 0.5 * std::erfc(-(samples[i] - mean) / (stddev * std::sqrt(2.0)));
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace pf
