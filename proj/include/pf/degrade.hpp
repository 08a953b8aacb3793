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

#ifndef PF_DEGRADE_HPP_
#define PF_DEGRADE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pf/image.hpp"

namespace pf {

// Anisotropic Gaussian blur. theta rotates the principal (sigma1) axis.
struct BlurParams {
  int size = 7;
  double sigma1 = 1.5;
  double sigma2 = 1.5;
  double theta = 0.0;
};

// size x size weights, row-major, indexed from the top-left corner; the
// center tap sits at (size / 2, size / 2).
struct BlurKernel {
  int size = 0;
  std::vector<double> weights;

  double at(int row, int col) const { return weights[row * size + col]; }
};

// Nearest-neighbor is intentionally not offered for degradation.
enum class ResampleMethod { kArea, kBilinear, kBicubic };

std::string ResampleMethodName(ResampleMethod method);
ResampleMethod ParseResampleMethod(const std::string& name);

struct NoiseParams {
  // Standard deviation on the 0-255 scale.
  double gaussian_sigma = 0.0;
  // Photons per unit intensity; absent disables the shot-noise term.
  std::optional<double> poisson_lambda;
  bool per_channel = true;
};

// Pipeline steps. The `random_*` flags defer a parameter to the step's
// sub-stream; DegradePipeline records the resolved value in provenance.
struct BlurStep {
  BlurParams params;
  bool random_theta = false;  // uniform in [0, pi)
};

struct DownscaleStep {
  int factor = 2;
  ResampleMethod method = ResampleMethod::kBicubic;
  bool random_method = false;  // uniform over the three methods
};

struct NoiseStep {
  NoiseParams params;
  bool random_lambda = false;  // log-uniform in [kLambdaMin, kLambdaMax]
};

inline constexpr double kLambdaMin = 200.0;
inline constexpr double kLambdaMax = 2000.0;

using DegradationStep = std::variant<BlurStep, DownscaleStep, NoiseStep>;

struct DegradationSpec {
  std::vector<DegradationStep> steps;
  std::uint64_t seed = 0;
};

struct ProvenanceStep {
  int index = 0;
  std::uint64_t sub_seed = 0;
  DegradationStep resolved;
};

struct ProvenanceRecord {
  std::uint64_t seed = 0;
  int input_width = 0, input_height = 0, channels = 0;
  int output_width = 0, output_height = 0;
  std::vector<ProvenanceStep> steps;

  // A spec that regenerates the same output bit-exactly.
  DegradationSpec ToSpec() const;
};

struct DegradeResult {
  ImageF32 image;
  ProvenanceRecord provenance;
};

BlurKernel BuildGaussianKernel(const BlurParams& p);

// Per-channel 2-D correlation, reflect-101 borders, same output size.
ImageF32 Convolve(const ImageF32& img, const BlurKernel& k);

// Area averages the exact source footprint; Bilinear and Bicubic (a = -0.5)
// sample at half-pixel centers with edge-clamped taps. Works for both
// downscaling and upscaling.
ImageF32 Resample(const ImageF32& img, int out_w, int out_h, ResampleMethod m);

// Zero-order hold upscale by an integer factor (pixel replication).
ImageF32 ReplicateUpscale(const ImageF32& img, int factor);

// Adds N(0, (sigma_255/255)^2) to every sample. The result is not clamped.
ImageF32 AddGaussianNoise(const ImageF32& img, double sigma_255,
                          bool per_channel, std::uint64_t seed);

// I + (P(lambda * max(I, 0)) - lambda * max(I, 0)) / lambda per sample.
ImageF32 AddPoissonNoise(const ImageF32& img, double lambda,
                         std::uint64_t seed);

// Applies the steps in order. Step i draws from DeriveSeed(spec.seed, i).
DegradeResult DegradePipeline(const ImageF32& img, const DegradationSpec& spec);

// The factor by which the spec shrinks each image axis.
int TotalDownscale(const DegradationSpec& spec);

nlohmann::json StepToJson(const DegradationStep& step);
DegradationStep StepFromJson(const nlohmann::json& j);
nlohmann::json SpecToJson(const DegradationSpec& spec);
DegradationSpec SpecFromJson(const nlohmann::json& j);
nlohmann::json ProvenanceToJson(const ProvenanceRecord& record);
ProvenanceRecord ProvenanceFromJson(const nlohmann::json& j);

}  // namespace pf

#endif  // PF_DEGRADE_HPP_
