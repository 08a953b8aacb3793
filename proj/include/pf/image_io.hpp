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

#ifndef PF_IMAGE_IO_HPP_
#define PF_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pf/image.hpp"

namespace pf {

// Decodes PNG (8/16-bit, gray/gray+alpha/RGB/RGBA/palette) or baseline TIFF.
// 16-bit samples are reduced with round(v / 257); alpha is dropped.
ImageU8 DecodeImage(std::span<const std::uint8_t> bytes);

// 8-bit PNG, gray or RGB. Output is deterministic for identical input.
std::vector<std::uint8_t> EncodePng(const ImageU8& img);

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

ImageU8 ReadImage(const std::filesystem::path& path);
void WritePng(const std::filesystem::path& path, const ImageU8& img);

// True for extensions DecodeImage can handle (.png, .tif, .tiff).
bool IsImagePath(const std::filesystem::path& path);

}  // namespace pf

#endif  // PF_IMAGE_IO_HPP_
