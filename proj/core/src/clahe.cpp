#include "histoclahe/clahe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "parallel.hpp"

namespace histoclahe {

void ClaheParams::validate() const {
  if (grid_x < 1 || grid_y < 1) throw std::invalid_argument("CLAHE grid counts must be >= 1");
  if (clip_factor && !(std::isfinite(*clip_factor) && *clip_factor > 0.0)) {
    throw std::invalid_argument("CLAHE clip factor must be a positive finite number");
  }
}

Histogram256 clip_and_redistribute(const Histogram256& hist, std::uint64_t clip_limit) {
  if (clip_limit < 1) throw std::invalid_argument("clip limit must be >= 1");
  Histogram256 out = hist;
  std::uint64_t excess = 0;
  for (auto& count : out.bins) {
    if (count > clip_limit) {
      excess += count - clip_limit;
      count = clip_limit;
    }
  }
  const std::uint64_t share = excess / 256;
  const std::uint64_t remainder = excess % 256;
  for (std::size_t v = 0; v < 256; ++v) {
    out.bins[v] += share + (v < remainder ? 1 : 0);
  }
  return out;
}

std::uint64_t clip_limit_for(double clip_factor, std::uint64_t tile_pixels) {
  const double limit = clip_factor * static_cast<double>(tile_pixels) / 256.0;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(limit)));
}

Raster pad_to_grid(const Raster& raster, int grid_x, int grid_y) {
  const int tile_w = (raster.width + grid_x - 1) / grid_x;
  const int tile_h = (raster.height + grid_y - 1) / grid_y;
  const int padded_w = tile_w * grid_x;
  const int padded_h = tile_h * grid_y;
  if (padded_w == raster.width && padded_h == raster.height) return raster;
  Raster out(padded_w, padded_h);
  for (int y = 0; y < padded_h; ++y) {
    const int sy = std::min(y, raster.height - 1);
    for (int x = 0; x < padded_w; ++x) {
      out.at(x, y) = raster.at(std::min(x, raster.width - 1), sy);
    }
  }
  return out;
}

TileGrid build_tile_luts(const Raster& raster, const ClaheParams& params, const ExecutionOptions& exec) {
  params.validate();
  if (raster.width < 1 || raster.height < 1) throw std::invalid_argument("raster is empty");
  if (params.grid_x > raster.width || params.grid_y > raster.height) {
    throw std::invalid_argument("CLAHE grid is larger than the image");
  }
  const Raster padded = pad_to_grid(raster, params.grid_x, params.grid_y);

  TileGrid grid;
  grid.grid_x = params.grid_x;
  grid.grid_y = params.grid_y;
  grid.tile_w = padded.width / params.grid_x;
  grid.tile_h = padded.height / params.grid_y;
  grid.source_width = raster.width;
  grid.source_height = raster.height;
  grid.luts.resize(static_cast<std::size_t>(params.grid_x) * static_cast<std::size_t>(params.grid_y));

  const std::uint64_t tile_pixels = static_cast<std::uint64_t>(grid.tile_w) * grid.tile_h;
  const std::optional<std::uint64_t> limit =
      params.clip_factor ? std::optional(clip_limit_for(*params.clip_factor, tile_pixels)) : std::nullopt;

  detail::parallel_for(grid.luts.size(), exec.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const int i = static_cast<int>(t % static_cast<std::size_t>(grid.grid_x));
      const int j = static_cast<int>(t / static_cast<std::size_t>(grid.grid_x));
      Histogram256 hist =
          compute_histogram(padded, Rect{i * grid.tile_w, j * grid.tile_h, grid.tile_w, grid.tile_h});
      // A single-valued tile keeps the identity map whatever the clip limit.
      const bool flat = std::count_if(hist.bins.begin(), hist.bins.end(), [](std::uint64_t b) { return b > 0; }) == 1;
      if (flat) {
        grid.luts[t] = LookupTable::identity();
        continue;
      }
      if (limit) hist = clip_and_redistribute(hist, *limit);
      grid.luts[t] = equalize_mapping(hist);
    }
  });
  return grid;
}

namespace {

// Position of a pixel relative to the tile centers along one axis, as the
// rational weight `frac / (2 * tile)` between tiles `lo` and `hi`.
struct AxisSpan {
  int lo = 0;
  int hi = 0;
  std::uint64_t frac = 0;
};

AxisSpan locate(int coord, int tile, int tiles) {
  // t = (coord + 0.5) / tile - 0.5 = (2*coord + 1 - tile) / (2*tile)
  const long numer = 2L * coord + 1 - tile;
  const long denom = 2L * tile;
  if (numer < 0) return {0, 0, 0};
  const long index = numer / denom;
  if (index >= tiles - 1) return {tiles - 1, tiles - 1, 0};
  return {static_cast<int>(index), static_cast<int>(index) + 1,
          static_cast<std::uint64_t>(numer % denom)};
}

}  // namespace

Raster blend_tiles(const Raster& raster, const TileGrid& grid, const ExecutionOptions& exec) {
  if (grid.source_width != raster.width || grid.source_height != raster.height ||
      grid.luts.size() != static_cast<std::size_t>(grid.grid_x) * static_cast<std::size_t>(grid.grid_y) ||
      grid.tile_w * grid.grid_x < raster.width || grid.tile_h * grid.grid_y < raster.height) {
    throw std::invalid_argument("tile grid does not match raster");
  }
  const std::uint64_t wx_total = 2ull * static_cast<std::uint64_t>(grid.tile_w);
  const std::uint64_t wy_total = 2ull * static_cast<std::uint64_t>(grid.tile_h);
  const std::uint64_t denom = wx_total * wy_total;

  std::vector<AxisSpan> columns(static_cast<std::size_t>(raster.width));
  for (int x = 0; x < raster.width; ++x) columns[static_cast<std::size_t>(x)] = locate(x, grid.tile_w, grid.grid_x);

  Raster out(raster.width, raster.height);
  detail::parallel_for(static_cast<std::size_t>(raster.height), exec.threads,
                       [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const int y = static_cast<int>(row);
      const AxisSpan ys = locate(y, grid.tile_h, grid.grid_y);
      const std::uint64_t wy = ys.frac;
      const std::uint64_t wy_c = wy_total - wy;
      for (int x = 0; x < raster.width; ++x) {
        const AxisSpan& xs = columns[static_cast<std::size_t>(x)];
        const std::uint64_t wx = xs.frac;
        const std::uint64_t wx_c = wx_total - wx;
        const std::uint8_t v = raster.at(x, y);
        const std::uint64_t top = wx_c * grid.lut(xs.lo, ys.lo).map[v] + wx * grid.lut(xs.hi, ys.lo).map[v];
        const std::uint64_t bottom = wx_c * grid.lut(xs.lo, ys.hi).map[v] + wx * grid.lut(xs.hi, ys.hi).map[v];
        const std::uint64_t sum = wy_c * top + wy * bottom;
        // Exact rational interpolation, rounded half away from zero.
        out.at(x, y) = static_cast<std::uint8_t>((2 * sum + denom) / (2 * denom));
      }
    }
  });
  return out;
}

Raster clahe(const Raster& raster, const ClaheParams& params, const ExecutionOptions& exec) {
  return blend_tiles(raster, build_tile_luts(raster, params, exec), exec);
}

}  // namespace histoclahe
