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

#include "pf/tiling.hpp"

#include <algorithm>
#include <string>

#include "pf/error.hpp"
#include "pf/image_io.hpp"

namespace pf {
namespace {

std::vector<int> PlanAxis(int extent, int tile, int stride) {
  std::vector<int> origins;
  for (int o = 0; o + tile <= extent; o += stride) origins.push_back(o);
  if (origins.back() + tile < extent) origins.push_back(extent - tile);
  origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
  return origins;
}

void CheckGrid(const TileGrid& g) {
  if (g.tile < 1 || g.overlap < 0 || g.overlap >= g.tile || g.xs.empty() ||
      g.ys.empty()) {
    throw Error(ErrorCode::kGridMismatch, "malformed tile grid");
  }
  const auto check_axis = [&](const std::vector<int>& o, int extent) {
    if (o.front() != 0 || o.back() + g.tile != extent ||
        !std::is_sorted(o.begin(), o.end())) {
      throw Error(ErrorCode::kGridMismatch, "tile origins do not cover the image");
    }
  };
  check_axis(g.xs, g.image_w);
  check_axis(g.ys, g.image_h);
}

}  // namespace

TileGrid TileGrid::Scaled(int factor) const {
  TileGrid g = *this;
  g.image_w *= factor;
  g.image_h *= factor;
  g.tile *= factor;
  g.overlap *= factor;
  for (int& x : g.xs) x *= factor;
  for (int& y : g.ys) y *= factor;
  return g;
}

TileGrid PlanTiles(int width, int height, int tile, int overlap) {
  if (tile < 1 || overlap < 0 || overlap >= tile) {
    throw Error(ErrorCode::kInvalidArgument,
                "need 0 <= overlap < tile, got tile=" + std::to_string(tile) +
                    " overlap=" + std::to_string(overlap));
  }
  if (width < tile || height < tile) {
    throw Error(ErrorCode::kImageSmallerThanTile,
                std::to_string(width) + "x" + std::to_string(height) +
                    " image is smaller than tile " + std::to_string(tile));
  }
  TileGrid g{width, height, tile, overlap, {}, {}};
  g.xs = PlanAxis(width, tile, tile - overlap);
  g.ys = PlanAxis(height, tile, tile - overlap);
  return g;
}

std::vector<Tile> ExtractTiles(const ImageF32& img, const TileGrid& grid) {
  CheckGrid(grid);
  if (img.width() != grid.image_w || img.height() != grid.image_h) {
    throw Error(ErrorCode::kGridMismatch, "grid was planned for a different image size");
  }
  std::vector<Tile> tiles;
  tiles.reserve(grid.count());
  for (int iy = 0; iy < static_cast<int>(grid.ys.size()); ++iy) {
    for (int ix = 0; ix < static_cast<int>(grid.xs.size()); ++ix) {
      const Rect r = grid.rect(ix, iy);
      tiles.push_back({ix, iy, r, Crop(img, r)});
    }
  }
  return tiles;
}

std::vector<double> AxisBlendWeights(const std::vector<int>& origins,
                                     std::size_t index, int tile) {
  std::vector<double> w(static_cast<std::size_t>(tile), 1.0);
  const int origin = origins[index];
  if (index > 0) {
    const int margin = origins[index - 1] + tile - origin;
    for (int d = 0; d < std::min(margin, tile); ++d) {
      w[d] = std::min(w[d], (d + 1.0) / (margin + 1.0));
    }
  }
  if (index + 1 < origins.size()) {
    const int margin = origin + tile - origins[index + 1];
    for (int e = 0; e < std::min(margin, tile); ++e) {
      const int d = tile - 1 - e;
      w[d] = std::min(w[d], (e + 1.0) / (margin + 1.0));
    }
  }
  return w;
}

ImageF32 StitchTiles(const std::vector<Tile>& tiles, const TileGrid& grid) {
  CheckGrid(grid);
  const std::size_t nx = grid.xs.size();
  const std::size_t ny = grid.ys.size();
  std::vector<const Tile*> slots(nx * ny, nullptr);
  int channels = -1;
  for (const Tile& t : tiles) {
    if (t.ix < 0 || t.iy < 0 || static_cast<std::size_t>(t.ix) >= nx ||
        static_cast<std::size_t>(t.iy) >= ny) {
      throw Error(ErrorCode::kGridMismatch, "tile index outside grid");
    }
    const Tile*& slot = slots[t.iy * nx + t.ix];
    if (slot != nullptr) {
      throw Error(ErrorCode::kGridMismatch,
                  "duplicate tile " + std::to_string(t.iy) + "_" + std::to_string(t.ix));
    }
    if (t.pixels.width() != grid.tile || t.pixels.height() != grid.tile) {
      throw Error(ErrorCode::kGridMismatch,
                  "tile " + std::to_string(t.iy) + "_" + std::to_string(t.ix) +
                      " is " + std::to_string(t.pixels.width()) + "x" +
                      std::to_string(t.pixels.height()) + ", grid expects " +
                      std::to_string(grid.tile));
    }
    if (channels >= 0 && t.pixels.channels() != channels) {
      throw Error(ErrorCode::kGridMismatch, "tiles disagree on channel count");
    }
    channels = t.pixels.channels();
    slot = &t;
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i] == nullptr) {
      throw Error(ErrorCode::kMissingTile,
                  "tile " + std::to_string(i / nx) + "_" + std::to_string(i % nx));
    }
  }

  std::vector<std::vector<double>> wx(nx), wy(ny);
  for (std::size_t i = 0; i < nx; ++i) wx[i] = AxisBlendWeights(grid.xs, i, grid.tile);
  for (std::size_t i = 0; i < ny; ++i) wy[i] = AxisBlendWeights(grid.ys, i, grid.tile);

  const std::size_t plane = static_cast<std::size_t>(grid.image_w) * grid.image_h;
  std::vector<double> num(plane * channels, 0.0);
  std::vector<double> den(plane, 0.0);
  // Grid-index order keeps the floating-point accumulation order fixed.
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Tile& t = *slots[iy * nx + ix];
      const int x0 = grid.xs[ix];
      const int y0 = grid.ys[iy];
      for (int y = 0; y < grid.tile; ++y) {
        for (int x = 0; x < grid.tile; ++x) {
          const double w = wx[ix][x] * wy[iy][y];
          const std::size_t p = static_cast<std::size_t>(y0 + y) * grid.image_w + (x0 + x);
          den[p] += w;
          for (int c = 0; c < channels; ++c) {
            num[c * plane + p] += w * t.pixels.at(x, y, c);
          }
        }
      }
    }
  }
  ImageF32 out(grid.image_w, grid.image_h, channels);
  auto data = out.data();
  for (int c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      data[c * plane + p] = static_cast<float>(num[c * plane + p] / den[p]);
    }
  }
  return out;
}

std::vector<double> NormalizedWeightCoverage(const TileGrid& grid) {
  CheckGrid(grid);
  const std::size_t plane = static_cast<std::size_t>(grid.image_w) * grid.image_h;
  std::vector<double> den(plane, 0.0);
  for (std::size_t iy = 0; iy < grid.ys.size(); ++iy) {
    const auto wy = AxisBlendWeights(grid.ys, iy, grid.tile);
    for (std::size_t ix = 0; ix < grid.xs.size(); ++ix) {
      const auto wx = AxisBlendWeights(grid.xs, ix, grid.tile);
      for (int y = 0; y < grid.tile; ++y) {
        for (int x = 0; x < grid.tile; ++x) {
          den[static_cast<std::size_t>(grid.ys[iy] + y) * grid.image_w + grid.xs[ix] + x] +=
              wx[x] * wy[y];
        }
      }
    }
  }
  std::vector<double> coverage(plane, 0.0);
  for (std::size_t iy = 0; iy < grid.ys.size(); ++iy) {
    const auto wy = AxisBlendWeights(grid.ys, iy, grid.tile);
    for (std::size_t ix = 0; ix < grid.xs.size(); ++ix) {
      const auto wx = AxisBlendWeights(grid.xs, ix, grid.tile);
      for (int y = 0; y < grid.tile; ++y) {
        for (int x = 0; x < grid.tile; ++x) {
          const std::size_t p =
              static_cast<std::size_t>(grid.ys[iy] + y) * grid.image_w + grid.xs[ix] + x;
          coverage[p] += wx[x] * wy[y] / den[p];
        }
      }
    }
  }
  return coverage;
}

nlohmann::json GridToJson(const TileGrid& grid) {
  return {{"image_width", grid.image_w}, {"image_height", grid.image_h},
          {"tile", grid.tile},           {"overlap", grid.overlap},
          {"xs", grid.xs},               {"ys", grid.ys}};
}

TileGrid GridFromJson(const nlohmann::json& j) {
  TileGrid g;
  try {
    g.image_w = j.at("image_width").get<int>();
    g.image_h = j.at("image_height").get<int>();
    g.tile = j.at("tile").get<int>();
    g.overlap = j.at("overlap").get<int>();
    g.xs = j.at("xs").get<std::vector<int>>();
    g.ys = j.at("ys").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("grid.json: ") + e.what());
  }
  CheckGrid(g);
  return g;
}

void WriteTileSet(const std::filesystem::path& dir, const std::vector<Tile>& tiles,
                  const TileGrid& grid) {
  std::filesystem::create_directories(dir / "tiles");
  for (const Tile& t : tiles) {
    WritePng(dir / "tiles" / (std::to_string(t.iy) + "_" + std::to_string(t.ix) + ".png"),
             F32ToU8(t.pixels));
  }
  WriteTextFile(dir / "grid.json", GridToJson(grid).dump(2) + "\n");
}

std::pair<TileGrid, std::vector<Tile>> ReadTileSet(const std::filesystem::path& dir) {
  const TileGrid grid = GridFromJson(nlohmann::json::parse(ReadTextFile(dir / "grid.json"), nullptr, false));
  std::vector<Tile> tiles;
  for (int iy = 0; iy < static_cast<int>(grid.ys.size()); ++iy) {
    for (int ix = 0; ix < static_cast<int>(grid.xs.size()); ++ix) {
      const auto path =
          dir / "tiles" / (std::to_string(iy) + "_" + std::to_string(ix) + ".png");
      if (!std::filesystem::exists(path)) {
        throw Error(ErrorCode::kMissingTile, path.string());
      }
      tiles.push_back({ix, iy, grid.rect(ix, iy), U8ToF32(ReadImage(path))});
    }
  }
  return {grid, std::move(tiles)};
}

}  // namespace pf
