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

#include "pf/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pf/error.hpp"

namespace pf {
namespace {

void CheckDims(int width, int height, int channels, std::size_t length) {
  if (width < 0 || height < 0 || channels < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid image dimensions");
  }
  if (length != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::kShapeMismatch,
                "data length " + std::to_string(length) + " != " +
                    std::to_string(width) + "x" + std::to_string(height) +
                    "x" + std::to_string(channels));
  }
}

}  // namespace

ImageU8::ImageU8(int width, int height, int channels)
    : ImageU8(width, height, channels,
              std::vector<std::uint8_t>(
                  static_cast<std::size_t>(std::max(width, 0)) *
                  std::max(height, 0) * std::max(channels, 0))) {}

ImageU8::ImageU8(int width, int height, int channels,
                 std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "8-bit images carry 1 or 3 channels, got " +
                    std::to_string(channels));
  }
  CheckDims(width, height, channels, data_.size());
}

ImageF32::ImageF32(int width, int height, int channels, float fill)
    : ImageF32(width, height, channels,
               std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                      std::max(height, 0) *
                                      std::max(channels, 0),
                                  fill)) {}

ImageF32::ImageF32(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  CheckDims(width, height, channels, data_.size());
}

bool ImageF32::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

ImageF32 U8ToF32(const ImageU8& img) {
  ImageF32 out(img.width(), img.height(), img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        out.at(x, y, c) = static_cast<float>(img.at(x, y, c)) / 255.0f;
      }
    }
  }
  return out;
}

ImageF32 Clamp01(const ImageF32& img) {
  ImageF32 out = img;
  for (float& v : out.data()) {
    v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
  }
  return out;
}

ImageU8 F32ToU8(const ImageF32& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "cannot quantize a " + std::to_string(img.channels()) +
                    "-channel image");
  }
  ImageU8 out(img.width(), img.height(), img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        float v = img.at(x, y, c);
        v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
        // std::round rounds half away from zero.
        out.at(x, y, c) = static_cast<std::uint8_t>(
            std::round(static_cast<double>(v) * 255.0));
      }
    }
  }
  return out;
}

ImageF32 Crop(const ImageF32& img, const Rect& r) {
  if (r.width < 1 || r.height < 1 || r.x < 0 || r.y < 0 ||
      r.x + r.width > img.width() || r.y + r.height > img.height()) {
    throw Error(ErrorCode::kOutOfBounds,
                "rect (" + std::to_string(r.x) + "," + std::to_string(r.y) +
                    "," + std::to_string(r.width) + "x" +
                    std::to_string(r.height) + ") outside " +
                    std::to_string(img.width()) + "x" +
                    std::to_string(img.height()));
  }
  ImageF32 out(r.width, r.height, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < r.height; ++y) {
      const auto src = img.plane(c).subspan(
          static_cast<std::size_t>(r.y + y) * img.width() + r.x, r.width);
      std::copy(src.begin(), src.end(),
                out.plane(c).begin() + static_cast<std::ptrdiff_t>(y) * r.width);
    }
  }
  return out;
}

void Paste(ImageF32& dst, const ImageF32& src, int x, int y) {
  if (src.channels() != dst.channels() || x < 0 || y < 0 ||
      x + src.width() > dst.width() || y + src.height() > dst.height()) {
    throw Error(ErrorCode::kOutOfBounds, "paste target outside image");
  }
  for (int c = 0; c < src.channels(); ++c) {
    for (int row = 0; row < src.height(); ++row) {
      for (int col = 0; col < src.width(); ++col) {
        dst.at(x + col, y + row, c) = src.at(col, row, c);
      }
    }
  }
}

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSingularCovariance: return "SingularCovariance";
    case ErrorCode::kImageSmallerThanWindow: return "ImageSmallerThanWindow";
    case ErrorCode::kImageSmallerThanTile: return "ImageSmallerThanTile";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kMissingTile: return "MissingTile";
    case ErrorCode::kEmptyLayerList: return "EmptyLayerList";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMissingCell: return "MissingCell";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kTimestepOutOfRange: return "TimestepOutOfRange";
    case ErrorCode::kMissingNoise: return "MissingNoise";
    case ErrorCode::kPredictorShapeViolation: return "PredictorShapeViolation";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::kNonFiniteTerm: return "NonFiniteTerm";
    case ErrorCode::kExternalFailure: return "ExternalFailure";
    case ErrorCode::kShapeViolation: return "ShapeViolation";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kIoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace pf
