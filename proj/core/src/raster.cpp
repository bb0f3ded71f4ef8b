#include "histoclahe/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

namespace histoclahe {

Raster::Raster(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
  if (w < 1 || h < 1) throw std::invalid_argument("raster dimensions must be >= 1");
}

Raster::Raster(int w, int h, std::vector<std::uint8_t> data)
    : width(w), height(h), pixels(std::move(data)) {
  if (w < 1 || h < 1) throw std::invalid_argument("raster dimensions must be >= 1");
  if (pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw std::invalid_argument("raster pixel count does not match width*height");
  }
}

RgbRaster::RgbRaster(int w, int h, Rgb fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
  if (w < 1 || h < 1) throw std::invalid_argument("raster dimensions must be >= 1");
}

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then parses an unsigned decimal.
  long next_number(const char* what) {
    skip_separators();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw ImageError(ImageErrorKind::malformed_header,
                       std::string("PNM header: expected ") + what);
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) {
        throw ImageError(ImageErrorKind::malformed_header,
                         std::string("PNM header: ") + what + " too large");
      }
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the sample data.
  void expect_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ImageError(ImageErrorKind::malformed_header,
                       "PNM header: missing whitespace after maxval");
    }
    ++pos_;
  }

  std::span<const std::uint8_t> remaining() const { return bytes_.subspan(pos_); }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

DecodedImage decode_pnm(std::span<const std::uint8_t> bytes, bool color) {
  PnmReader reader(bytes);
  reader.advance(2);
  const long width = reader.next_number("width");
  const long height = reader.next_number("height");
  const long maxval = reader.next_number("maxval");
  if (width < 1 || height < 1) {
    throw ImageError(ImageErrorKind::malformed_header, "PNM header: zero dimension");
  }
  if (maxval < 1) {
    throw ImageError(ImageErrorKind::malformed_header, "PNM header: maxval must be >= 1");
  }
  if (maxval > 255) {
    throw ImageError(ImageErrorKind::unsupported_depth,
                     "PNM: only 8-bit samples are supported (maxval " + std::to_string(maxval) + ")");
  }
  reader.expect_single_whitespace();

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t needed = count * (color ? 3 : 1);
  auto data = reader.remaining();
  if (data.size() < needed) {
    throw ImageError(ImageErrorKind::truncated_data,
                     "PNM: expected " + std::to_string(needed) + " sample bytes, found " +
                         std::to_string(data.size()));
  }
  if (!color) {
    return Raster(static_cast<int>(width), static_cast<int>(height),
                  std::vector<std::uint8_t>(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(count)));
  }
  RgbRaster rgb(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t i = 0; i < count; ++i) {
    rgb.pixels[i] = Rgb{data[3 * i], data[3 * i + 1], data[3 * i + 2]};
  }
  return rgb;
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

DecodedImage decode_png(std::span<const std::uint8_t> bytes) {
  // signature(8) + length(4) + "IHDR"(4) + width(4) + height(4) + depth(1) + color type(1)
  if (bytes.size() < 26 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw ImageError(ImageErrorKind::malformed_header, "PNG: missing IHDR chunk");
  }
  const std::uint8_t bit_depth = bytes[24];
  const std::uint8_t color_type = bytes[25];
  if (bit_depth == 16) {
    throw ImageError(ImageErrorKind::unsupported_depth, "PNG: 16-bit images are not supported");
  }
  const bool gray = color_type == 0 || color_type == 4;

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string message = image.message;
    png_image_free(&image);
    throw ImageError(ImageErrorKind::malformed_header, "PNG: " + message);
  }
  if (image.width != read_be32(bytes.data() + 16) || image.height != read_be32(bytes.data() + 20) ||
      image.width > 1u << 24 || image.height > 1u << 24) {
    png_image_free(&image);
    throw ImageError(ImageErrorKind::malformed_header, "PNG: inconsistent dimensions");
  }
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw ImageError(ImageErrorKind::truncated_data, "PNG: " + message);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  png_image_free(&image);

  if (gray) return Raster(w, h, std::move(buffer));
  RgbRaster rgb(w, h);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) {
    rgb.pixels[i] = Rgb{buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
  }
  return rgb;
}

std::vector<std::uint8_t> pnm_header(const char* magic, int width, int height) {
  const std::string header =
      std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  return {header.begin(), header.end()};
}

std::vector<std::uint8_t> encode_png(const std::uint8_t* data, int width, int height, bool gray) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr)) {
    throw ImageError(ImageErrorKind::io_failure, std::string("PNG encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr)) {
    throw ImageError(ImageErrorKind::io_failure, std::string("PNG encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

void validate(const Raster& raster) {
  if (raster.width < 1 || raster.height < 1 ||
      raster.pixels.size() != static_cast<std::size_t>(raster.width) * static_cast<std::size_t>(raster.height)) {
    throw std::invalid_argument("invalid raster");
  }
}

}  // namespace

std::optional<ImageFormat> detect_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return ImageFormat::pgm;
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return ImageFormat::ppm;
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin())) {
    return ImageFormat::png;
  }
  return std::nullopt;
}

DecodedImage decode_image(std::span<const std::uint8_t> bytes, std::optional<ImageFormat> hint) {
  const auto detected = detect_format(bytes);
  if (!detected) {
    throw ImageError(ImageErrorKind::unsupported_format, "unrecognised image signature");
  }
  // P5/P6 are interchangeable under a PNM hint; any other disagreement is an error.
  if (hint && *hint != *detected) {
    const bool both_pnm = *hint != ImageFormat::png && *detected != ImageFormat::png;
    if (!both_pnm) {
      throw ImageError(ImageErrorKind::unsupported_format, "image content does not match format hint");
    }
  }
  switch (*detected) {
    case ImageFormat::pgm:
      return decode_pnm(bytes, false);
    case ImageFormat::ppm:
      return decode_pnm(bytes, true);
    case ImageFormat::png:
      return decode_png(bytes);
  }
  throw ImageError(ImageErrorKind::unsupported_format, "unknown format");
}

std::vector<std::uint8_t> encode_image(const Raster& raster, ImageFormat format) {
  validate(raster);
  switch (format) {
    case ImageFormat::pgm: {
      auto out = pnm_header("P5", raster.width, raster.height);
      out.insert(out.end(), raster.pixels.begin(), raster.pixels.end());
      return out;
    }
    case ImageFormat::png:
      return encode_png(raster.pixels.data(), raster.width, raster.height, true);
    case ImageFormat::ppm:
      break;
  }
  throw std::invalid_argument("gray rasters encode as pgm or png");
}

std::vector<std::uint8_t> encode_image(const RgbRaster& raster, ImageFormat format) {
  std::vector<std::uint8_t> interleaved;
  interleaved.reserve(raster.pixels.size() * 3);
  for (const Rgb& p : raster.pixels) {
    interleaved.push_back(p.r);
    interleaved.push_back(p.g);
    interleaved.push_back(p.b);
  }
  switch (format) {
    case ImageFormat::ppm: {
      auto out = pnm_header("P6", raster.width, raster.height);
      out.insert(out.end(), interleaved.begin(), interleaved.end());
      return out;
    }
    case ImageFormat::png:
      return encode_png(interleaved.data(), raster.width, raster.height, false);
    case ImageFormat::pgm:
      break;
  }
  throw std::invalid_argument("color rasters encode as ppm or png");
}

Raster to_luma(const RgbRaster& rgb) {
  Raster out(rgb.width, rgb.height);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) {
    const Rgb& p = rgb.pixels[i];
    // Weights scaled by 1000; all terms non-negative so +500 is half-away-from-zero.
    const unsigned weighted = 299u * p.r + 587u * p.g + 114u * p.b;
    out.pixels[i] = static_cast<std::uint8_t>(std::min(255u, (weighted + 500u) / 1000u));
  }
  return out;
}

Raster to_gray(DecodedImage image) {
  if (auto* gray = std::get_if<Raster>(&image)) return std::move(*gray);
  return to_luma(std::get<RgbRaster>(image));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(ImageErrorKind::io_failure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError(ImageErrorKind::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError(ImageErrorKind::io_failure, "write failed for " + path.string());
}

Raster load_gray(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return to_gray(decode_image(bytes));
}

void save_gray(const std::filesystem::path& path, const Raster& raster) {
  const auto format = path.extension() == ".png" ? ImageFormat::png : ImageFormat::pgm;
  write_file(path, encode_image(raster, format));
}

Raster resize_nearest(const Raster& src, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("resize target must be >= 1x1");
  if (src.width == width && src.height == height) return src;
  Raster out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>((2L * y + 1) * src.height / (2L * height));
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>((2L * x + 1) * src.width / (2L * width));
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

}  // namespace histoclahe
