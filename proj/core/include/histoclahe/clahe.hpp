#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "histoclahe/histogram.hpp"
#include "histoclahe/raster.hpp"

namespace histoclahe {

/// Tile grid and contrast limit. An empty `clip_factor` disables clipping,
/// which turns CLAHE into plain adaptive histogram equalization (AHE).
struct ClaheParams {
  int grid_x = 8;
  int grid_y = 8;
  /// Multiple of the mean bin count (tile_pixels / 256).
  std::optional<double> clip_factor = 2.0;

  void validate() const;
  friend bool operator==(const ClaheParams&, const ClaheParams&) = default;
};

/// Per-tile lookup tables over the edge-padded image.
///
/// The raster is padded on the right and bottom by edge replication so that
/// every tile has the same size. Tile (i, j) covers padded columns
/// [i*tile_w, (i+1)*tile_w) and rows [j*tile_h, (j+1)*tile_h); its center
/// sits at ((i + 0.5)*tile_w - 0.5, (j + 0.5)*tile_h - 0.5).
struct TileGrid {
  int grid_x = 0;
  int grid_y = 0;
  int tile_w = 0;
  int tile_h = 0;
  int source_width = 0;
  int source_height = 0;
  std::vector<LookupTable> luts;  // row-major: luts[j * grid_x + i]

  const LookupTable& lut(int i, int j) const { return luts[static_cast<std::size_t>(j * grid_x + i)]; }
  double center_x(int i) const { return (i + 0.5) * tile_w - 0.5; }
  double center_y(int j) const { return (j + 0.5) * tile_h - 0.5; }
};

/// Parallelism knob for the tiled pipeline. Output does not depend on it.
struct ExecutionOptions {
  unsigned threads = 1;
};

/// Clips every bin at `clip_limit` and spreads the removed excess E evenly:
/// floor(E/256) to each bin plus one more to bins 0..(E mod 256)-1. Single
/// pass, so bins may end slightly above the limit. The total is preserved.
/// Throws std::invalid_argument when clip_limit < 1.
Histogram256 clip_and_redistribute(const Histogram256& hist, std::uint64_t clip_limit);

/// Count ceiling used for a tile: max(1, round(clip_factor * tile_pixels / 256)).
std::uint64_t clip_limit_for(double clip_factor, std::uint64_t tile_pixels);

Raster pad_to_grid(const Raster& raster, int grid_x, int grid_y);

TileGrid build_tile_luts(const Raster& raster, const ClaheParams& params,
                         const ExecutionOptions& exec = {});

/// Bilinear blend of the surrounding tile LUTs: four tiles in the interior,
/// two along border strips, the nearest one in the corners.
Raster blend_tiles(const Raster& raster, const TileGrid& grid, const ExecutionOptions& exec = {});

Raster clahe(const Raster& raster, const ClaheParams& params, const ExecutionOptions& exec = {});

}  // namespace histoclahe
