#include "histoclahe/histogram.hpp"

#include <numeric>
#include <stdexcept>

namespace histoclahe {

std::uint64_t Histogram256::total() const {
  return std::accumulate(bins.begin(), bins.end(), std::uint64_t{0});
}

LookupTable LookupTable::identity() {
  LookupTable lut;
  std::iota(lut.map.begin(), lut.map.end(), std::uint8_t{0});
  return lut;
}

bool LookupTable::is_monotone() const {
  for (std::size_t v = 1; v < map.size(); ++v) {
    if (map[v] < map[v - 1]) return false;
  }
  return true;
}

Histogram256 compute_histogram(const Raster& raster, std::optional<Rect> region) {
  const Rect r = region.value_or(Rect{0, 0, raster.width, raster.height});
  if (r.x < 0 || r.y < 0 || r.width < 0 || r.height < 0 || r.x + r.width > raster.width ||
      r.y + r.height > raster.height) {
    throw std::out_of_range("histogram region lies outside the raster");
  }
  Histogram256 hist;
  for (int y = r.y; y < r.y + r.height; ++y) {
    for (int x = r.x; x < r.x + r.width; ++x) ++hist.bins[raster.at(x, y)];
  }
  return hist;
}

LookupTable equalize_mapping(const Histogram256& hist) {
  const std::uint64_t total = hist.total();
  if (total == 0) throw std::invalid_argument("cannot equalize an empty histogram");

  std::uint64_t cdf_min = 0;
  for (std::uint64_t count : hist.bins) {
    if (count != 0) {
      cdf_min = count;
      break;
    }
  }
  if (cdf_min == total) return LookupTable::identity();

  // Exact rational rounding: round(a / b) = floor((2a + b) / 2b) for a >= 0.
  const std::uint64_t denom = total - cdf_min;
  LookupTable lut;
  std::uint64_t cdf = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    cdf += hist.bins[v];
    if (cdf < cdf_min) {
      lut.map[v] = 0;
      continue;
    }
    const std::uint64_t numer = 255 * (cdf - cdf_min);
    lut.map[v] = static_cast<std::uint8_t>((2 * numer + denom) / (2 * denom));
  }
  return lut;
}

Raster apply_lut(const Raster& raster, const LookupTable& lut) {
  Raster out = raster;
  for (auto& p : out.pixels) p = lut.map[p];
  return out;
}

Raster equalize(const Raster& raster) {
  return apply_lut(raster, equalize_mapping(compute_histogram(raster)));
}

}  // namespace histoclahe
