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

#ifndef PF_TILING_HPP_
#define PF_TILING_HPP_

#include <filesystem>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pf/image.hpp"

namespace pf {

inline constexpr int kDefaultTile = 256;
inline constexpr int kDefaultOverlap = 32;

// Square tiles on a regular grid. Origins advance by tile - overlap; the
// last origin on each axis is clamped so the final tile ends on the image
// edge.
struct TileGrid {
  int image_w = 0;
  int image_h = 0;
  int tile = kDefaultTile;
  int overlap = kDefaultOverlap;
  std::vector<int> xs;
  std::vector<int> ys;

  std::size_t count() const { return xs.size() * ys.size(); }
  Rect rect(int ix, int iy) const { return {xs[ix], ys[iy], tile, tile}; }
  // Every length multiplied by `factor`, for restorers that upscale tiles.
  TileGrid Scaled(int factor) const;

  friend bool operator==(const TileGrid&, const TileGrid&) = default;
};

struct Tile {
  int ix = 0;
  int iy = 0;
  Rect rect;
  ImageF32 pixels;
};

TileGrid PlanTiles(int width, int height, int tile = kDefaultTile,
                   int overlap = kDefaultOverlap);

std::vector<Tile> ExtractTiles(const ImageF32& img, const TileGrid& grid);

// Weight of each position along one axis of tile `index`: 1 inside, falling
// linearly to 1/(m+1) at the edge across every margin of width m that is
// shared with a neighbour.
std::vector<double> AxisBlendWeights(const std::vector<int>& origins,
                                     std::size_t index, int tile);

// Normalized blend of overlapping tiles, separable tent weights.
ImageF32 StitchTiles(const std::vector<Tile>& tiles, const TileGrid& grid);

// Sum over tiles of the normalized weight at each pixel (row-major,
// image_w x image_h); 1 everywhere by construction.
std::vector<double> NormalizedWeightCoverage(const TileGrid& grid);

nlohmann::json GridToJson(const TileGrid& grid);
TileGrid GridFromJson(const nlohmann::json& j);

// Directory layout: tiles/{iy}_{ix}.png plus grid.json.
void WriteTileSet(const std::filesystem::path& dir, const std::vector<Tile>& tiles,
                  const TileGrid& grid);
std::pair<TileGrid, std::vector<Tile>> ReadTileSet(const std::filesystem::path& dir);

}  // namespace pf

#endif  // PF_TILING_HPP_
