#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace histoclahe {

/// 8-bit single-channel image, row-major.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(int w, int h, std::uint8_t fill = 0);
  Raster(int w, int h, std::vector<std::uint8_t> data);

  std::uint8_t at(int x, int y) const { return pixels[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels[index(x, y)]; }
  std::size_t size() const { return pixels.size(); }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct RgbRaster {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  RgbRaster() = default;
  RgbRaster(int w, int h, Rgb fill = {});

  friend bool operator==(const RgbRaster&, const RgbRaster&) = default;
};

using DecodedImage = std::variant<Raster, RgbRaster>;

enum class ImageFormat { pgm, ppm, png };

enum class ImageErrorKind {
  malformed_header,
  truncated_data,
  unsupported_depth,
  unsupported_format,
  io_failure,
};

class ImageError : public std::runtime_error {
 public:
  ImageError(ImageErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ImageErrorKind kind() const noexcept { return kind_; }

 private:
  ImageErrorKind kind_;
};

/// Sniffs the magic bytes; returns nullopt for anything unrecognised.
std::optional<ImageFormat> detect_format(std::span<const std::uint8_t> bytes);

/// Decodes binary PGM (P5), binary PPM (P6) or 8-bit PNG. P5 and gray PNG
/// produce a Raster; P6 and color PNG produce an RgbRaster. Sample values are
/// passed through unscaled. 16-bit sources are rejected with
/// ImageErrorKind::unsupported_depth.
DecodedImage decode_image(std::span<const std::uint8_t> bytes,
                          std::optional<ImageFormat> hint = std::nullopt);

/// Encodes a gray raster as PGM (canonical "P5\n<w> <h>\n255\n" header) or PNG.
std::vector<std::uint8_t> encode_image(const Raster& raster, ImageFormat format);
/// Encodes a color raster as PPM or PNG.
std::vector<std::uint8_t> encode_image(const RgbRaster& raster, ImageFormat format);

/// Rec.601 luma, rounded half away from zero.
Raster to_luma(const RgbRaster& rgb);
/// Gray rasters pass through; color rasters go through to_luma.
Raster to_gray(DecodedImage image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Reads and decodes a file, converting to gray. Format is sniffed from content.
Raster load_gray(const std::filesystem::path& path);
/// Format chosen from the extension: ".png" writes PNG, anything else PGM.
void save_gray(const std::filesystem::path& path, const Raster& raster);

/// Nearest-neighbour resampling; source index = floor((dst + 0.5) * src / dst_size).
Raster resize_nearest(const Raster& src, int width, int height);

}  // namespace histoclahe
