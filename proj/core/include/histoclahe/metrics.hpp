#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace histoclahe {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// The five scores of a binary classifier. A score whose denominator is zero
/// is reported as 0.
struct MetricsRow {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

struct NamedMetrics {
  std::string name;
  ConfusionMatrix counts;
  MetricsRow scores;
};

/// Throws std::invalid_argument on length mismatch or empty input.
ConfusionMatrix tally_confusion(std::span<const int> predictions, std::span<const int> truths,
                                int positive);

/// Throws std::invalid_argument for an all-zero matrix.
MetricsRow compute_metrics(const ConfusionMatrix& cm);

NamedMetrics make_named(std::string name, const ConfusionMatrix& cm);

struct Report {
  std::string csv;
  std::string json;
};

inline constexpr const char* kReportHeader =
    "name,tp,tn,fp,fn,accuracy,sensitivity,specificity,precision,f1";

/// Renders rows as CSV (six decimals) and the equivalent JSON document.
/// Throws std::invalid_argument for an empty row set.
Report render_report(std::span<const NamedMetrics> rows);

/// Writes `csv_path` and a sibling `.json` file; returns the rendered bytes.
Report write_report(std::span<const NamedMetrics> rows, const std::filesystem::path& csv_path);

/// Parses a report CSV back into rows; scores are recomputed from the counts.
std::vector<NamedMetrics> parse_report_csv(const std::string& text);

}  // namespace histoclahe
