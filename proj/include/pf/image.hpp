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

#ifndef PF_IMAGE_HPP_
#define PF_IMAGE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pf {

// 8-bit raster with row-major interleaved samples (RGBRGB... or gray).
class ImageU8 {
 public:
  ImageU8() = default;
  ImageU8(int width, int height, int channels);
  ImageU8(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  friend bool operator==(const ImageU8&, const ImageU8&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

// Planar float raster; the working currency of every pipeline stage.
// Samples are nominally in [0, 1] but intermediate results (noise) may leave
// that range.
class ImageF32 {
 public:
  ImageF32() = default;
  ImageF32(int width, int height, int channels, float fill = 0.0f);
  ImageF32(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::size_t size() const { return data_.size(); }

  float at(int x, int y, int c) const {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }
  float& at(int x, int y, int c) {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<const float> plane(int c) const {
    return std::span<const float>(data_).subspan(c * plane_size(),
                                                 plane_size());
  }
  std::span<float> plane(int c) {
    return std::span<float>(data_).subspan(c * plane_size(), plane_size());
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool same_shape(const ImageF32& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  bool all_finite() const;

  friend bool operator==(const ImageF32&, const ImageF32&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 1;
  int height = 1;

  friend bool operator==(const Rect&, const Rect&) = default;
};

// s -> s / 255, interleaved -> planar.
ImageF32 U8ToF32(const ImageU8& img);

// Clamp to [0,1], scale by 255, round half away from zero. Non-finite
// samples map to 0.
ImageF32 Clamp01(const ImageF32& img);
ImageU8 F32ToU8(const ImageF32& img);

// Copies the sub-raster; throws kOutOfBounds when `r` leaves the image.
ImageF32 Crop(const ImageF32& img, const Rect& r);

// Writes `src` into `dst` with its top-left corner at (x, y).
void Paste(ImageF32& dst, const ImageF32& src, int x, int y);

}  // namespace pf

#endif  // PF_IMAGE_HPP_
