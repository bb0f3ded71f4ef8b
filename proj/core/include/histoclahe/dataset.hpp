#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "histoclahe/clahe.hpp"
#include "histoclahe/raster.hpp"

namespace histoclahe {

inline constexpr int kHealthy = 0;
inline constexpr int kDiseased = 1;

/// Directory name for a class label ("healthy" / "diseased").
const char* class_directory(int label);

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SplitRole { unassigned, train, eval };

struct DatasetSample {
  std::string name;             // file name used when the sample is written out
  std::filesystem::path source;  // empty for generated samples
  Raster image;
  int label = kHealthy;
  SplitRole split = SplitRole::unassigned;
};

struct SyntheticParams {
  int per_class = 100;
  int size = 64;
  int gap = 30;        // intensity band width of the class-1 structures
  double noise = 6.0;  // std-dev of additive pixel noise

  void validate() const;
  friend bool operator==(const SyntheticParams&, const SyntheticParams&) = default;
};

struct Provenance {
  bool synthetic = false;
  std::uint64_t seed = 0;
  SyntheticParams params;
  std::filesystem::path root;
};

struct DatasetManifest {
  std::vector<DatasetSample> samples;
  Provenance provenance;

  std::size_t count(int label) const;
  std::size_t count(SplitRole role) const;
  /// Labels in {0,1}, both classes present, and either no sample or every
  /// sample carries a split assignment. Throws DataError otherwise.
  void validate() const;
};

/// Reads `root/healthy` (label 0) and `root/diseased` (label 1). Samples are
/// ordered by label, then lexicographically by path. Files without a PGM, PPM
/// or PNG signature are skipped; color images are converted to luma.
DatasetManifest ingest_directory(const std::filesystem::path& root);

struct SyntheticImage {
  Raster image;
  std::vector<std::uint8_t> foreground;  // 1 where a class-1 structure was drawn
};

/// One synthetic image. Both classes share a low-contrast textured background
/// with a random global brightness; class 1 adds smooth blobs whose
/// intensities stay inside a band `gap` levels wide.
SyntheticImage synthesize_image(const SyntheticParams& params, int label, std::uint64_t seed);

/// per_class images of each class, healthy first. Bit-deterministic in (params, seed).
DatasetManifest generate_synthetic_dataset(const SyntheticParams& params, std::uint64_t seed);

/// Stratified split: per class, a seeded permutation sends the first
/// floor(ratio * n_class) samples to train and the rest to eval.
DatasetManifest split_dataset(DatasetManifest manifest, double ratio, std::uint64_t seed);

/// Writes every sample to `output_dir/<class>/<name>`, enhanced with CLAHE
/// when params are given. Without params, file-backed samples are copied
/// byte-for-byte. Labels and split roles are preserved.
DatasetManifest preprocess_batch(const DatasetManifest& manifest, const std::optional<ClaheParams>& params,
                                 const std::filesystem::path& output_dir, const ExecutionOptions& exec = {});

/// Writes samples as-is in the class-directory layout read by ingest_directory.
void write_dataset(const DatasetManifest& manifest, const std::filesystem::path& output_dir);

/// SplitMix64 finalizer; used to derive independent seeds from one value.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace histoclahe
