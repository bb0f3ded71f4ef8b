#include "histoclahe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "parallel.hpp"

namespace histoclahe {

namespace fs = std::filesystem;

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

// Box-Muller; one draw per call keeps the stream easy to reason about.
double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_uniform(rng);  // (0, 1]
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint8_t clamp_level(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

bool is_image_file(const fs::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return false;
  std::uint8_t head[8] = {};
  const std::size_t n = std::fread(head, 1, sizeof(head), f);
  std::fclose(f);
  return detect_format(std::span<const std::uint8_t>(head, n)).has_value();
}

std::string output_name(const DatasetSample& sample, bool enhanced) {
  fs::path name = sample.name;
  if (enhanced && name.extension() != ".png") name.replace_extension(".pgm");
  return name.string();
}

}  // namespace

const char* class_directory(int label) {
  switch (label) {
    case kHealthy:
      return "healthy";
    case kDiseased:
      return "diseased";
  }
  throw DataError("label must be 0 or 1, got " + std::to_string(label));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void SyntheticParams::validate() const {
  if (per_class < 2) throw DataError("synthetic dataset needs at least 2 images per class");
  if (size < 16) throw DataError("synthetic image size must be >= 16");
  if (gap < 1 || gap > 255) throw DataError("contrast gap must lie in [1, 255]");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw DataError("noise level must be finite and >= 0");
}

std::size_t DatasetManifest::count(int label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const auto& s) { return s.label == label; }));
}

std::size_t DatasetManifest::count(SplitRole role) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const auto& s) { return s.split == role; }));
}

void DatasetManifest::validate() const {
  for (const auto& s : samples) {
    if (s.label != kHealthy && s.label != kDiseased) throw DataError("sample label must be 0 or 1");
  }
  if (count(kHealthy) == 0 || count(kDiseased) == 0) throw DataError("both classes must be present");
  const std::size_t unassigned = count(SplitRole::unassigned);
  if (unassigned != 0 && unassigned != samples.size()) {
    throw DataError("split assignment is incomplete");
  }
}

DatasetManifest ingest_directory(const fs::path& root) {
  DatasetManifest manifest;
  manifest.provenance.root = root;
  std::set<fs::path> seen;
  for (int label : {kHealthy, kDiseased}) {
    const fs::path dir = root / class_directory(label);
    if (!fs::is_directory(dir)) throw DataError("missing class directory " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no decodable images in " + dir.string());
    for (const auto& file : files) {
      if (!seen.insert(fs::weakly_canonical(file)).second) {
        throw DataError("duplicate image path " + file.string());
      }
      DatasetSample sample;
      sample.name = file.filename().string();
      sample.source = file;
      try {
        sample.image = load_gray(file);
      } catch (const ImageError& e) {
        throw DataError(file.string() + ": " + e.what());
      }
      sample.label = label;
      manifest.samples.push_back(std::move(sample));
    }
  }
  return manifest;
}

SyntheticImage synthesize_image(const SyntheticParams& params, int label, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  const int n = params.size;
  const double gap = params.gap;

  // Global brightness varies from image to image in both classes.
  const double base = uniform(rng, 70.0, 170.0);

  // Low-frequency background texture with amplitude comparable to the gap.
  struct Wave {
    double amp, fx, fy, phase;
  };
  Wave waves[3];
  for (auto& w : waves) {
    w.amp = uniform(rng, 0.0, gap / 4.0);
    w.fx = uniform(rng, 0.5, 3.0);
    w.fy = uniform(rng, 0.5, 3.0);
    w.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }

  SyntheticImage out{Raster(n, n), std::vector<std::uint8_t>(static_cast<std::size_t>(n) * n, 0)};
  std::vector<double> field(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double v = base;
      for (const auto& w : waves) {
        v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) / n + w.phase);
      }
      field[static_cast<std::size_t>(y) * n + x] = v;
    }
  }

  if (label == kDiseased) {
    // Domes spanning [band_lo, band_lo + gap], centered on the base level.
    const double band_lo = std::clamp(std::round(base - gap / 2.0), 0.0, 255.0 - gap);
    const int blobs = 3 + static_cast<int>(rng() % 3);
    for (int b = 0; b < blobs; ++b) {
      const double radius = uniform(rng, n / 10.0, n / 6.0);
      const double cx = uniform(rng, radius, n - 1 - radius);
      const double cy = uniform(rng, radius, n - 1 - radius);
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double d = std::hypot(x - cx, y - cy) / radius;
          if (d >= 1.0) continue;
          const std::size_t i = static_cast<std::size_t>(y) * n + x;
          const double dome = band_lo + gap * (1.0 - d * d);
          field[i] = out.foreground[i] ? std::max(field[i], dome) : dome;
          out.foreground[i] = 1;
        }
      }
    }
    for (std::size_t i = 0; i < field.size(); ++i) {
      double v = field[i] + params.noise * gaussian(rng);
      if (out.foreground[i]) v = std::clamp(v, band_lo, band_lo + gap);
      out.image.pixels[i] = clamp_level(v);
    }
  } else {
    for (std::size_t i = 0; i < field.size(); ++i) {
      out.image.pixels[i] = clamp_level(field[i] + params.noise * gaussian(rng));
    }
  }
  return out;
}

DatasetManifest generate_synthetic_dataset(const SyntheticParams& params, std::uint64_t seed) {
  params.validate();
  DatasetManifest manifest;
  manifest.provenance = Provenance{true, seed, params, {}};
  std::uint64_t index = 0;
  for (int label : {kHealthy, kDiseased}) {
    for (int i = 0; i < params.per_class; ++i, ++index) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04d.pgm", class_directory(label), i);
      DatasetSample sample;
      sample.name = name;
      sample.image = synthesize_image(params, label, mix_seed(seed, index)).image;
      sample.label = label;
      manifest.samples.push_back(std::move(sample));
    }
  }
  return manifest;
}

DatasetManifest split_dataset(DatasetManifest manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DataError("split ratio must lie in (0, 1)");
  for (const auto& s : manifest.samples) {
    if (s.label != kHealthy && s.label != kDiseased) throw DataError("sample label must be 0 or 1");
  }
  std::mt19937_64 rng(seed);
  for (int label : {kHealthy, kDiseased}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
      if (manifest.samples[i].label == label) members.push_back(i);
    }
    if (members.size() < 2) {
      throw DataError(std::string("class ") + class_directory(label) + " needs at least 2 samples to split");
    }
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[static_cast<std::size_t>(rng() % i)]);
    }
    const auto train_count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < members.size(); ++k) {
      manifest.samples[members[k]].split = k < train_count ? SplitRole::train : SplitRole::eval;
    }
  }
  return manifest;
}

DatasetManifest preprocess_batch(const DatasetManifest& manifest, const std::optional<ClaheParams>& params,
                                 const fs::path& output_dir, const ExecutionOptions& exec) {
  if (params) params->validate();
  DatasetManifest out = manifest;
  for (int label : {kHealthy, kDiseased}) {
    std::error_code ec;
    fs::create_directories(output_dir / class_directory(label), ec);
    if (ec) throw DataError("cannot create " + (output_dir / class_directory(label)).string() + ": " + ec.message());
  }
  std::set<fs::path> targets;
  for (auto& sample : out.samples) {
    fs::path target = output_dir / class_directory(sample.label) / output_name(sample, params.has_value());
    if (!targets.insert(target).second) throw DataError("two samples map to " + target.string());
    sample.source = std::move(target);
    sample.name = sample.source.filename().string();
  }
  // Images are independent; each worker owns a disjoint slice.
  detail::parallel_for(out.samples.size(), exec.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const DatasetSample& original = manifest.samples[i];
      DatasetSample& sample = out.samples[i];
      try {
        if (params) {
          sample.image = clahe(original.image, *params);
          save_gray(sample.source, sample.image);
        } else if (!original.source.empty()) {
          write_file(sample.source, read_file(original.source));
        } else {
          save_gray(sample.source, sample.image);
        }
      } catch (const ImageError& e) {
        throw DataError(sample.source.string() + ": " + e.what());
      }
    }
  });
  return out;
}

void write_dataset(const DatasetManifest& manifest, const fs::path& output_dir) {
  preprocess_batch(manifest, std::nullopt, output_dir);
}

}  // namespace histoclahe
