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

#include "pf/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pf/error.hpp"
#include "pf/rng.hpp"

namespace pf {
namespace {

// Stream ids inside one step's sub-seed.
constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kResolveStream = 1;
constexpr std::uint64_t kPoissonStream = 2;

int Reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

struct Tap {
  int index;
  double weight;
};

using AxisTaps = std::vector<std::vector<Tap>>;

double CubicWeight(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

AxisTaps BuildTaps(int in, int out, ResampleMethod method) {
  AxisTaps taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    auto& list = taps[o];
    switch (method) {
      case ResampleMethod::kArea: {
        const double lo = o * scale;
        const double hi = (o + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int i = first; i <= last; ++i) {
          const double overlap = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
          if (overlap > 0.0) list.push_back({i, overlap / scale});
        }
        break;
      }
      case ResampleMethod::kBilinear: {
        double src = (o + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const int i0 = static_cast<int>(std::floor(src));
        const double f = src - i0;
        list.push_back({i0, 1.0 - f});
        list.push_back({std::min(i0 + 1, in - 1), f});
        break;
      }
      case ResampleMethod::kBicubic: {
        const double src = (o + 0.5) * scale - 0.5;
        const int i0 = static_cast<int>(std::floor(src));
        const double f = src - i0;
        for (int k = -1; k <= 2; ++k) {
          list.push_back({std::clamp(i0 + k, 0, in - 1), CubicWeight(k - f)});
        }
        break;
      }
    }
  }
  return taps;
}

void CheckSigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kSingularCovariance,
                "blur sigma must be positive, got " + std::to_string(sigma));
  }
}

}  // namespace

std::string ResampleMethodName(ResampleMethod method) {
  switch (method) {
    case ResampleMethod::kArea: return "area";
    case ResampleMethod::kBilinear: return "bilinear";
    case ResampleMethod::kBicubic: return "bicubic";
  }
  return "bicubic";
}

ResampleMethod ParseResampleMethod(const std::string& name) {
  if (name == "area") return ResampleMethod::kArea;
  if (name == "bilinear") return ResampleMethod::kBilinear;
  if (name == "bicubic") return ResampleMethod::kBicubic;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown resample method '" + name +
                  "' (expected area, bilinear or bicubic)");
}

BlurKernel BuildGaussianKernel(const BlurParams& p) {
  if (p.size < 3 || p.size % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "kernel size must be odd and >= 3, got " + std::to_string(p.size));
  }
  CheckSigma(p.sigma1);
  CheckSigma(p.sigma2);

  // Inverse covariance R diag(1/s1^2, 1/s2^2) R^T written out.
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const double inv1 = 1.0 / (p.sigma1 * p.sigma1);
  const double inv2 = 1.0 / (p.sigma2 * p.sigma2);
  const double qa = c * c * inv1 + s * s * inv2;
  const double qb = c * s * (inv1 - inv2);
  const double qc = s * s * inv1 + c * c * inv2;

  BlurKernel k{p.size, std::vector<double>(static_cast<std::size_t>(p.size) * p.size)};
  const int r = p.size / 2;
  double total = 0.0;
  for (int row = 0; row < p.size; ++row) {
    const double j = row - r;
    for (int col = 0; col < p.size; ++col) {
      const double i = col - r;
      const double q = qa * i * i + 2.0 * qb * i * j + qc * j * j;
      const double w = std::exp(-0.5 * q);
      k.weights[row * p.size + col] = w;
      total += w;
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

ImageF32 Convolve(const ImageF32& img, const BlurKernel& k) {
  if (img.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image");
  const int w = img.width();
  const int h = img.height();
  const int r = k.size / 2;
  const int pw = w + 2 * r;
  ImageF32 out(w, h, img.channels());
  std::vector<double> padded(static_cast<std::size_t>(pw) * (h + 2 * r));
  for (int c = 0; c < img.channels(); ++c) {
    const auto src = img.plane(c);
    for (int y = -r; y < h + r; ++y) {
      const int sy = Reflect101(y, h);
      for (int x = -r; x < w + r; ++x) {
        padded[static_cast<std::size_t>(y + r) * pw + (x + r)] =
            src[static_cast<std::size_t>(sy) * w + Reflect101(x, w)];
      }
    }
    auto dst = out.plane(c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int ky = 0; ky < k.size; ++ky) {
          const double* row = &padded[static_cast<std::size_t>(y + ky) * pw + x];
          const double* kw = &k.weights[static_cast<std::size_t>(ky) * k.size];
          for (int kx = 0; kx < k.size; ++kx) acc += kw[kx] * row[kx];
        }
        dst[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

ImageF32 Resample(const ImageF32& img, int out_w, int out_h, ResampleMethod m) {
  if (out_w < 1 || out_h < 1) {
    throw Error(ErrorCode::kInvalidArgument, "resample target must be >= 1x1");
  }
  if (img.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image");
  const int w = img.width();
  const int h = img.height();
  const AxisTaps xt = BuildTaps(w, out_w, m);
  const AxisTaps yt = BuildTaps(h, out_h, m);
  ImageF32 out(out_w, out_h, img.channels());
  std::vector<double> rows(static_cast<std::size_t>(h) * out_w);
  for (int c = 0; c < img.channels(); ++c) {
    const auto src = img.plane(c);
    for (int y = 0; y < h; ++y) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = 0.0;
        for (const Tap& t : xt[ox]) {
          acc += t.weight * src[static_cast<std::size_t>(y) * w + t.index];
        }
        rows[static_cast<std::size_t>(y) * out_w + ox] = acc;
      }
    }
    auto dst = out.plane(c);
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = 0.0;
        for (const Tap& t : yt[oy]) {
          acc += t.weight * rows[static_cast<std::size_t>(t.index) * out_w + ox];
        }
        dst[static_cast<std::size_t>(oy) * out_w + ox] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

ImageF32 ReplicateUpscale(const ImageF32& img, int factor) {
  if (factor < 1) throw Error(ErrorCode::kInvalidArgument, "factor must be >= 1");
  ImageF32 out(img.width() * factor, img.height() * factor, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        out.at(x, y, c) = img.at(x / factor, y / factor, c);
      }
    }
  }
  return out;
}

ImageF32 AddGaussianNoise(const ImageF32& img, double sigma_255,
                          bool per_channel, std::uint64_t seed) {
  if (!(sigma_255 >= 0.0) || !std::isfinite(sigma_255)) {
    throw Error(ErrorCode::kInvalidArgument, "noise sigma must be >= 0");
  }
  ImageF32 out = img;
  if (sigma_255 == 0.0) return out;
  const double sigma = sigma_255 / 255.0;
  CounterRng rng(seed, kNoiseStream);
  if (per_channel) {
    for (float& v : out.data()) {
      v = static_cast<float>(v + sigma * rng.Normal());
    }
  } else {
    for (std::size_t p = 0; p < out.plane_size(); ++p) {
      const double n = sigma * rng.Normal();
      for (int c = 0; c < out.channels(); ++c) {
        float& v = out.plane(c)[p];
        v = static_cast<float>(v + n);
      }
    }
  }
  return out;
}

ImageF32 AddPoissonNoise(const ImageF32& img, double lambda,
                         std::uint64_t seed) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "poisson lambda must be > 0");
  }
  ImageF32 out = img;
  CounterRng rng(seed, kPoissonStream);
  for (float& v : out.data()) {
    const double expected = lambda * std::max(0.0, static_cast<double>(v));
    const auto count = static_cast<double>(rng.Poisson(expected));
    v = static_cast<float>(v + (count - expected) / lambda);
  }
  return out;
}

int TotalDownscale(const DegradationSpec& spec) {
  int total = 1;
  for (const auto& step : spec.steps) {
    if (const auto* d = std::get_if<DownscaleStep>(&step)) total *= d->factor;
  }
  return total;
}

DegradeResult DegradePipeline(const ImageF32& img, const DegradationSpec& spec) {
  DegradeResult result{img, {}};
  ProvenanceRecord& prov = result.provenance;
  prov.seed = spec.seed;
  prov.input_width = img.width();
  prov.input_height = img.height();
  prov.channels = img.channels();

  for (std::size_t i = 0; i < spec.steps.size(); ++i) {
    const std::uint64_t sub_seed = DeriveSeed(spec.seed, i);
    CounterRng resolver(sub_seed, kResolveStream);
    ImageF32& cur = result.image;
    DegradationStep resolved = spec.steps[i];

    if (auto* blur = std::get_if<BlurStep>(&resolved)) {
      if (blur->random_theta) {
        blur->params.theta = resolver.Uniform() * std::numbers::pi;
        blur->random_theta = false;
      }
      cur = Convolve(cur, BuildGaussianKernel(blur->params));
    } else if (auto* down = std::get_if<DownscaleStep>(&resolved)) {
      if (down->factor < 1) {
        throw Error(ErrorCode::kInvalidArgument, "downscale factor must be >= 1");
      }
      if (down->random_method) {
        down->method = static_cast<ResampleMethod>(resolver.UniformInt(3));
        down->random_method = false;
      }
      const int out_w = cur.width() / down->factor;
      const int out_h = cur.height() / down->factor;
      if (out_w < 1 || out_h < 1) {
        throw Error(ErrorCode::kInvalidArgument,
                    "downscale by " + std::to_string(down->factor) +
                        " empties a " + std::to_string(cur.width()) + "x" +
                        std::to_string(cur.height()) + " image");
      }
      cur = Resample(cur, out_w, out_h, down->method);
    } else if (auto* noise = std::get_if<NoiseStep>(&resolved)) {
      if (noise->random_lambda) {
        const double u = resolver.Uniform();
        noise->params.poisson_lambda =
            std::exp(std::log(kLambdaMin) + u * (std::log(kLambdaMax) - std::log(kLambdaMin)));
        noise->random_lambda = false;
      }
      // Both terms are driven by the clean input of this step.
      const ImageF32 clean = cur;
      cur = AddGaussianNoise(clean, noise->params.gaussian_sigma,
                             noise->params.per_channel, sub_seed);
      if (noise->params.poisson_lambda) {
        const ImageF32 shot = AddPoissonNoise(clean, *noise->params.poisson_lambda,
                                              sub_seed);
        auto dst = cur.data();
        const auto s = shot.data();
        const auto c = clean.data();
        for (std::size_t k = 0; k < dst.size(); ++k) {
          dst[k] = static_cast<float>(static_cast<double>(dst[k]) + s[k] - c[k]);
        }
      }
    }
    prov.steps.push_back({static_cast<int>(i), sub_seed, std::move(resolved)});
  }
  prov.output_width = result.image.width();
  prov.output_height = result.image.height();
  return result;
}

DegradationSpec ProvenanceRecord::ToSpec() const {
  DegradationSpec spec;
  spec.seed = seed;
  for (const auto& step : steps) spec.steps.push_back(step.resolved);
  return spec;
}

// ---------------------------------------------------------------- JSON

nlohmann::json StepToJson(const DegradationStep& step) {
  nlohmann::json j;
  if (const auto* blur = std::get_if<BlurStep>(&step)) {
    j["type"] = "blur";
    j["size"] = blur->params.size;
    j["sigma1"] = blur->params.sigma1;
    j["sigma2"] = blur->params.sigma2;
    if (blur->random_theta) {
      j["theta"] = "random";
    } else {
      j["theta"] = blur->params.theta;
    }
  } else if (const auto* down = std::get_if<DownscaleStep>(&step)) {
    j["type"] = "downscale";
    j["factor"] = down->factor;
    j["method"] = down->random_method ? "random" : ResampleMethodName(down->method);
  } else if (const auto* noise = std::get_if<NoiseStep>(&step)) {
    j["type"] = "noise";
    j["gaussian_sigma"] = noise->params.gaussian_sigma;
    j["per_channel"] = noise->params.per_channel;
    if (noise->random_lambda) {
      j["poisson_lambda"] = "random";
    } else if (noise->params.poisson_lambda) {
      j["poisson_lambda"] = *noise->params.poisson_lambda;
    }
  }
  return j;
}

DegradationStep StepFromJson(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "blur") {
      BlurStep s;
      s.params.size = j.at("size").get<int>();
      s.params.sigma1 = j.at("sigma1").get<double>();
      s.params.sigma2 = j.value("sigma2", s.params.sigma1);
      if (j.contains("theta")) {
        if (j["theta"].is_string()) {
          if (j["theta"] != "random") {
            throw Error(ErrorCode::kInvalidArgument, "theta must be a number or \"random\"");
          }
          s.random_theta = true;
        } else {
          s.params.theta = j["theta"].get<double>();
        }
      }
      return s;
    }
    if (type == "downscale") {
      DownscaleStep s;
      s.factor = j.at("factor").get<int>();
      const std::string method = j.value("method", std::string("bicubic"));
      if (method == "random") {
        s.random_method = true;
      } else {
        s.method = ParseResampleMethod(method);
      }
      return s;
    }
    if (type == "noise") {
      NoiseStep s;
      s.params.gaussian_sigma = j.value("gaussian_sigma", 0.0);
      s.params.per_channel = j.value("per_channel", true);
      if (j.contains("poisson_lambda") && !j["poisson_lambda"].is_null()) {
        if (j["poisson_lambda"].is_string()) {
          if (j["poisson_lambda"] != "random") {
            throw Error(ErrorCode::kInvalidArgument,
                        "poisson_lambda must be a number or \"random\"");
          }
          s.random_lambda = true;
        } else {
          s.params.poisson_lambda = j["poisson_lambda"].get<double>();
        }
      }
      return s;
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown step type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("degradation step: ") + e.what());
  }
}

nlohmann::json SpecToJson(const DegradationSpec& spec) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : spec.steps) steps.push_back(StepToJson(step));
  return {{"seed", spec.seed}, {"steps", steps}};
}

DegradationSpec SpecFromJson(const nlohmann::json& j) {
  DegradationSpec spec;
  try {
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("steps")) {
      for (const auto& s : j.at("steps")) spec.steps.push_back(StepFromJson(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("degradation spec: ") + e.what());
  }
  return spec;
}

nlohmann::json ProvenanceToJson(const ProvenanceRecord& record) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : record.steps) {
    nlohmann::json step = StepToJson(s.resolved);
    step["index"] = s.index;
    step["sub_seed"] = s.sub_seed;
    steps.push_back(step);
  }
  return {{"seed", record.seed},
          {"input", {{"width", record.input_width},
                     {"height", record.input_height},
                     {"channels", record.channels}}},
          {"output", {{"width", record.output_width},
                      {"height", record.output_height}}},
          {"steps", steps}};
}

ProvenanceRecord ProvenanceFromJson(const nlohmann::json& j) {
  ProvenanceRecord r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.input_width = j.at("input").at("width").get<int>();
    r.input_height = j.at("input").at("height").get<int>();
    r.channels = j.at("input").at("channels").get<int>();
    r.output_width = j.at("output").at("width").get<int>();
    r.output_height = j.at("output").at("height").get<int>();
    for (const auto& s : j.at("steps")) {
      r.steps.push_back({s.at("index").get<int>(),
                         s.at("sub_seed").get<std::uint64_t>(), StepFromJson(s)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("provenance: ") + e.what());
  }
  return r;
}

}  // namespace pf
