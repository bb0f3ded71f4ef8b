#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "histoclahe/raster.hpp"

namespace histoclahe {

struct Histogram256 {
  std::array<std::uint64_t, 256> bins{};

  std::uint64_t total() const;
  friend bool operator==(const Histogram256&, const Histogram256&) = default;
};

/// 256-entry intensity remapping.
struct LookupTable {
  std::array<std::uint8_t, 256> map{};

  static LookupTable identity();
  bool is_monotone() const;
  friend bool operator==(const LookupTable&, const LookupTable&) = default;
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Counts intensities inside `region` (the whole image when absent).
/// Throws std::out_of_range when the region leaves the raster.
Histogram256 compute_histogram(const Raster& raster, std::optional<Rect> region = std::nullopt);

/// CDF equalization that maps the lowest occupied bin to 0:
///   map[v] = round(255 * (cdf(v) - cdf_min) / (N - cdf_min))
/// clamped below at 0 for unoccupied leading bins. When every count sits in a
/// single bin (N == cdf_min) the identity map is returned.
/// Throws std::invalid_argument for an empty histogram.
LookupTable equalize_mapping(const Histogram256& hist);

Raster apply_lut(const Raster& raster, const LookupTable& lut);

/// Global histogram equalization of the whole raster.
Raster equalize(const Raster& raster);

}  // namespace histoclahe
