#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "histoclahe/raster.hpp"
#include "support/oracles.hpp"

using namespace histoclahe;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& header, std::initializer_list<int> payload) {
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (int v : payload) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

ImageErrorKind error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    (void)decode_image(bytes);
  } catch (const ImageError& e) {
    return e.kind();
  }
  FAIL("expected an ImageError");
  return ImageErrorKind::io_failure;
}

}  // namespace

TEST_CASE("decode a hand-encoded 2x2 PGM") {
  const auto decoded = decode_image(bytes_of("P5\n2 2\n255\n", {0, 128, 200, 255}));
  REQUIRE(std::holds_alternative<Raster>(decoded));
  const auto& r = std::get<Raster>(decoded);
  CHECK(r.width == 2);
  CHECK(r.height == 2);
  CHECK(r.pixels == std::vector<std::uint8_t>{0, 128, 200, 255});
}

TEST_CASE("PGM headers may carry comments and arbitrary whitespace") {
  const auto decoded = decode_image(bytes_of("P5 # comment\n\t2\r\n# another\n1 255\n", {7, 9}));
  CHECK(std::get<Raster>(decoded).pixels == std::vector<std::uint8_t>{7, 9});
}

TEST_CASE("encode a 1x1 raster as canonical PGM") {
  const auto bytes = encode_image(Raster(1, 1, std::vector<std::uint8_t>{0}), ImageFormat::pgm);
  CHECK(bytes == bytes_of("P5\n1 1\n255\n", {0}));
}

TEST_CASE("decode errors are reported distinctly") {
  CHECK(error_kind(bytes_of("P5\n2 2\n255\n", {1, 2, 3})) == ImageErrorKind::truncated_data);
  CHECK(error_kind(bytes_of("P5\n2 x\n255\n", {1, 2, 3, 4})) == ImageErrorKind::malformed_header);
  CHECK(error_kind(bytes_of("P5\n0 2\n255\n", {})) == ImageErrorKind::malformed_header);
  CHECK(error_kind(bytes_of("P5\n1 1\n65535\n", {0, 0})) == ImageErrorKind::unsupported_depth);
  CHECK(error_kind(bytes_of("P6\n1 1\n255\n", {1, 2})) == ImageErrorKind::truncated_data);
  CHECK(error_kind(bytes_of("GIF89a", {})) == ImageErrorKind::unsupported_format);
}

TEST_CASE("16-bit PNG sources are rejected") {
  // Valid 8-bit gray PNG with the IHDR bit depth patched to 16.
  auto png = encode_image(Raster(2, 2, std::uint8_t{9}), ImageFormat::png);
  png[24] = 16;
  CHECK(error_kind(png) == ImageErrorKind::unsupported_depth);
}

TEST_CASE("truncated PNG is an error") {
  auto png = encode_image(Raster(8, 8, std::uint8_t{9}), ImageFormat::png);
  png.resize(png.size() - 20);
  CHECK_THROWS_AS((void)decode_image(png), ImageError);
}

TEST_CASE("round trip is lossless for both formats") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<int> dim(1, 40);
    const Raster r = oracle::random_raster(rng, dim(rng), dim(rng));
    for (auto format : {ImageFormat::pgm, ImageFormat::png}) {
      const auto decoded = decode_image(encode_image(r, format));
      REQUIRE(std::holds_alternative<Raster>(decoded));
      CHECK(std::get<Raster>(decoded) == r);
    }
  }
  const Raster white(2, 2, std::uint8_t{255});
  CHECK(std::get<Raster>(decode_image(encode_image(white, ImageFormat::png))) == white);
}

TEST_CASE("encode(decode(x)) reproduces canonical P5 streams") {
  const auto stream = bytes_of("P5\n2 2\n255\n", {0, 128, 200, 255});
  CHECK(encode_image(std::get<Raster>(decode_image(stream)), ImageFormat::pgm) == stream);
}

TEST_CASE("color round trip through PPM and PNG") {
  RgbRaster rgb(3, 2);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) {
    rgb.pixels[i] = Rgb{static_cast<std::uint8_t>(40 * i), static_cast<std::uint8_t>(255 - 30 * i), 17};
  }
  for (auto format : {ImageFormat::ppm, ImageFormat::png}) {
    const auto decoded = decode_image(encode_image(rgb, format));
    REQUIRE(std::holds_alternative<RgbRaster>(decoded));
    CHECK(std::get<RgbRaster>(decoded) == rgb);
  }
}

TEST_CASE("Rec.601 luma") {
  RgbRaster rgb(3, 1);
  rgb.pixels = {{255, 255, 255}, {255, 0, 0}, {0, 0, 0}};
  const Raster gray = to_luma(rgb);
  CHECK(gray.pixels == std::vector<std::uint8_t>{255, 76, 0});

  RgbRaster ramp(256, 1);
  for (int v = 0; v < 256; ++v) {
    const auto c = static_cast<std::uint8_t>(v);
    ramp.pixels[static_cast<std::size_t>(v)] = Rgb{c, c, c};
  }
  const Raster ramp_gray = to_luma(ramp);
  for (int v = 0; v < 256; ++v) CHECK(ramp_gray.pixels[static_cast<std::size_t>(v)] == v);
}

TEST_CASE("to_luma rounds half away from zero") {
  // 0.587 * 12 + 0.114 * 4 = 7.5 exactly -> 8;  0.587 * 5 + 0.114 * 5 = 3.505 -> 4
  RgbRaster rgb(2, 1);
  rgb.pixels = {{0, 12, 4}, {0, 5, 5}};
  CHECK(to_luma(rgb).pixels == std::vector<std::uint8_t>{8, 4});
}

TEST_CASE("raster constructor rejects inconsistent data") {
  CHECK_THROWS_AS(Raster(2, 2, std::vector<std::uint8_t>{1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(Raster(0, 2), std::invalid_argument);
}

TEST_CASE("nearest-neighbour resize samples pixel centers") {
  Raster src(4, 2, std::vector<std::uint8_t>{0, 1, 2, 3, 4, 5, 6, 7});
  const Raster half = resize_nearest(src, 2, 1);
  // x: (2*0+1)*4/4 = 1, (2*1+1)*4/4 = 3;  y: (1*2)/2 = 1
  CHECK(half.pixels == std::vector<std::uint8_t>{5, 7});
  CHECK(resize_nearest(src, 4, 2) == src);
}

TEST_CASE("files round trip through save_gray/load_gray") {
  const auto dir = std::filesystem::temp_directory_path() / "histoclahe_raster_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(3);
  const Raster r = oracle::random_raster(rng, 13, 7);
  save_gray(dir / "a.png", r);
  save_gray(dir / "a.pgm", r);
  CHECK(load_gray(dir / "a.png") == r);
  CHECK(load_gray(dir / "a.pgm") == r);
  CHECK(detect_format(read_file(dir / "a.png")) == ImageFormat::png);
  std::filesystem::remove_all(dir);
}
