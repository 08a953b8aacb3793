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

#include "pf/image_io.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include "pf/error.hpp"

namespace pf {
namespace {

inline std::uint8_t Reduce16(unsigned v) {
  return static_cast<std::uint8_t>((v + 128u) / 257u);
}

// ---------------------------------------------------------------- PNG

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void PngErrorFn(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text != nullptr) *text = message;
  png_longjmp(png, 1);
}

void PngWarningFn(png_structp, png_const_charp) {}

void PngReadFn(png_structp png, png_bytep out, png_size_t length) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + length > state->bytes.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, state->bytes.data() + state->offset, length);
  state->offset += length;
}

void PngWriteFn(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void PngFlushFn(png_structp) {}

ImageU8 DecodePng(std::span<const std::uint8_t> bytes) {
  std::string error_text;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error_text,
                                           PngErrorFn, PngWarningFn);
  if (png == nullptr) throw Error(ErrorCode::kIoFailure, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  PngReadState state{bytes, 0};

  // Everything touched after setjmp lives in these so longjmp cannot skip
  // a destructor.
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0, channels = 0;
  volatile bool unsupported = false;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kMalformedFile, "PNG: " + error_text);
  }
  png_set_read_fn(png, &state, PngReadFn);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr,
               nullptr, nullptr);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_bytep trans = nullptr;
    int num_trans = 0;
    png_colorp palette = nullptr;
    int num_palette = 0;
    png_get_PLTE(png, info, &palette, &num_palette);
    if (png_get_tRNS(png, info, &trans, &num_trans, nullptr) != 0 &&
        num_trans > num_palette) {
      unsupported = true;
    }
    png_set_palette_to_rgb(png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if ((color_type & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  bit_depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  if (!unsupported && (channels == 1 || channels == 3) &&
      (bit_depth == 8 || bit_depth == 16)) {
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raw.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } else {
    unsupported = true;
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (unsupported) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "PNG layout not supported (channels=" +
                    std::to_string(channels) +
                    ", depth=" + std::to_string(bit_depth) + ")");
  }
  ImageU8 img(static_cast<int>(width), static_cast<int>(height), channels);
  auto out = img.data();
  if (bit_depth == 8) {
    std::copy(raw.begin(), raw.end(), out.begin());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = Reduce16((static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1]);
    }
  }
  return img;
}

// ---------------------------------------------------------------- TIFF

struct TiffMemory {
  std::span<const std::uint8_t> bytes;
  toff_t offset = 0;
};

tsize_t TiffRead(thandle_t handle, tdata_t buffer, tsize_t size) {
  auto* mem = static_cast<TiffMemory*>(handle);
  if (mem->offset >= mem->bytes.size()) return 0;
  const auto n = std::min<toff_t>(static_cast<toff_t>(size),
                                  mem->bytes.size() - mem->offset);
  std::memcpy(buffer, mem->bytes.data() + mem->offset, n);
  mem->offset += n;
  return static_cast<tsize_t>(n);
}

tsize_t TiffWrite(thandle_t, tdata_t, tsize_t) { return -1; }

toff_t TiffSeek(thandle_t handle, toff_t offset, int whence) {
  auto* mem = static_cast<TiffMemory*>(handle);
  switch (whence) {
    case SEEK_SET: mem->offset = offset; break;
    case SEEK_CUR: mem->offset += offset; break;
    case SEEK_END: mem->offset = mem->bytes.size() + offset; break;
    default: return static_cast<toff_t>(-1);
  }
  return mem->offset;
}

int TiffClose(thandle_t) { return 0; }

toff_t TiffSize(thandle_t handle) {
  return static_cast<TiffMemory*>(handle)->bytes.size();
}

int TiffMap(thandle_t, tdata_t*, toff_t*) { return 0; }
void TiffUnmap(thandle_t, tdata_t, toff_t) {}

void TiffSilence(const char*, const char*, va_list) {}

struct TiffCloser {
  void operator()(TIFF* tif) const { TIFFClose(tif); }
};

ImageU8 DecodeTiff(std::span<const std::uint8_t> bytes) {
  TIFFSetErrorHandler(TiffSilence);
  TIFFSetWarningHandler(TiffSilence);
  TiffMemory mem{bytes, 0};
  std::unique_ptr<TIFF, TiffCloser> tif(
      TIFFClientOpen("memory", "rm", &mem, TiffRead, TiffWrite, TiffSeek,
                     TiffClose, TiffSize, TiffMap, TiffUnmap));
  if (!tif) throw Error(ErrorCode::kMalformedFile, "TIFF header unreadable");

  std::uint32_t width = 0, height = 0;
  std::uint16_t bps = 8, spp = 1, planar = PLANARCONFIG_CONTIG;
  std::uint16_t photometric = PHOTOMETRIC_MINISBLACK;
  std::uint16_t sample_format = SAMPLEFORMAT_UINT;
  if (!TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width) ||
      !TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height)) {
    throw Error(ErrorCode::kMalformedFile, "TIFF missing dimensions");
  }
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &sample_format);
  TIFFGetField(tif.get(), TIFFTAG_PHOTOMETRIC, &photometric);

  const bool gray = photometric == PHOTOMETRIC_MINISBLACK ||
                    photometric == PHOTOMETRIC_MINISWHITE;
  const bool rgb = photometric == PHOTOMETRIC_RGB;
  const int channels = gray ? 1 : 3;
  if (TIFFIsTiled(tif.get()) || (bps != 8 && bps != 16) ||
      sample_format != SAMPLEFORMAT_UINT || !(gray || rgb) ||
      spp < channels || spp > channels + 1) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "TIFF layout not supported (bps=" + std::to_string(bps) +
                    ", spp=" + std::to_string(spp) +
                    ", photometric=" + std::to_string(photometric) + ")");
  }

  ImageU8 img(static_cast<int>(width), static_cast<int>(height), channels);
  std::vector<std::uint8_t> line(TIFFScanlineSize(tif.get()));
  const int bytes_per_sample = bps / 8;
  auto sample = [&](std::size_t index) -> std::uint8_t {
    if (bytes_per_sample == 1) return line[index];
    std::uint16_t v;
    std::memcpy(&v, line.data() + 2 * index, 2);  // libtiff swabs to host order
    return Reduce16(v);
  };
  const int passes = planar == PLANARCONFIG_SEPARATE ? channels : 1;
  for (int pass = 0; pass < passes; ++pass) {
    for (std::uint32_t y = 0; y < height; ++y) {
      if (TIFFReadScanline(tif.get(), line.data(), y,
                           static_cast<std::uint16_t>(pass)) < 0) {
        throw Error(ErrorCode::kMalformedFile,
                    "TIFF scanline " + std::to_string(y) + " unreadable");
      }
      for (std::uint32_t x = 0; x < width; ++x) {
        for (int c = 0; c < channels; ++c) {
          if (passes > 1 && c != pass) continue;
          const std::size_t index =
              passes > 1 ? x : static_cast<std::size_t>(x) * spp + c;
          std::uint8_t v = sample(index);
          if (photometric == PHOTOMETRIC_MINISWHITE) v = 255 - v;
          img.at(static_cast<int>(x), static_cast<int>(y), c) = v;
        }
      }
    }
  }
  return img;
}

bool HasPrefix(std::span<const std::uint8_t> bytes,
               std::initializer_list<std::uint8_t> magic) {
  return bytes.size() >= magic.size() &&
         std::equal(magic.begin(), magic.end(), bytes.begin());
}

}  // namespace

ImageU8 DecodeImage(std::span<const std::uint8_t> bytes) {
  if (HasPrefix(bytes, {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'})) {
    return DecodePng(bytes);
  }
  if (HasPrefix(bytes, {'I', 'I', 42, 0}) ||
      HasPrefix(bytes, {'M', 'M', 0, 42})) {
    return DecodeTiff(bytes);
  }
  throw Error(ErrorCode::kMalformedFile, "unrecognized raster signature");
}

namespace {

// Kept free of locals with destructors so the setjmp frame holds only
// trivially destructible state.
void EncodePngRows(const ImageU8& img, png_const_bytep* rows,
                   std::vector<std::uint8_t>* out, std::string* error_text) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, error_text,
                                            PngErrorFn, PngWarningFn);
  if (png == nullptr) throw Error(ErrorCode::kIoFailure, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoFailure, "PNG encode: " + *error_text);
  }
  png_set_write_fn(png, out, PngWriteFn, PngFlushFn);
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_rows(png, const_cast<png_bytepp>(rows),
                 static_cast<png_uint_32>(img.height()));
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

std::vector<std::uint8_t> EncodePng(const ImageU8& img) {
  if (img.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image");
  std::vector<std::uint8_t> out;
  std::string error_text;
  std::vector<png_const_bytep> rows(static_cast<std::size_t>(img.height()));
  const std::size_t stride =
      static_cast<std::size_t>(img.width()) * img.channels();
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = img.data().data() + y * stride;
  }
  EncodePngRows(img, rows.data(), &out, &error_text);
  return out;
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                 text.size()));
}

std::string ReadTextFile(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return {bytes.begin(), bytes.end()};
}

ImageU8 ReadImage(const std::filesystem::path& path) {
  try {
    return DecodeImage(ReadFileBytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

void WritePng(const std::filesystem::path& path, const ImageU8& img) {
  WriteFileBytes(path, EncodePng(img));
}

bool IsImagePath(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

}  // namespace pf
