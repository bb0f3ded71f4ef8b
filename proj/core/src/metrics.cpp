#include "histoclahe/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace histoclahe {

namespace {

double ratio(std::uint64_t numer, std::uint64_t denom) {
  return denom == 0 ? 0.0 : static_cast<double>(numer) / static_cast<double>(denom);
}

std::string fixed6(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

double round6(double value) { return std::round(value * 1e6) / 1e6; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

ConfusionMatrix tally_confusion(std::span<const int> predictions, std::span<const int> truths,
                                int positive) {
  if (predictions.size() != truths.size()) {
    throw std::invalid_argument("predictions and truths differ in length");
  }
  if (predictions.empty()) throw std::invalid_argument("cannot tally an empty label sequence");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool predicted = predictions[i] == positive;
    const bool actual = truths[i] == positive;
    if (predicted && actual) {
      ++cm.tp;
    } else if (predicted) {
      ++cm.fp;
    } else if (actual) {
      ++cm.fn;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

MetricsRow compute_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("confusion matrix is empty");
  MetricsRow row;
  row.accuracy = ratio(cm.tp + cm.tn, cm.total());
  row.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  row.specificity = ratio(cm.tn, cm.tn + cm.fp);
  row.precision = ratio(cm.tp, cm.tp + cm.fp);
  const double pr = row.precision + row.sensitivity;
  row.f1 = pr == 0.0 ? 0.0 : 2.0 * row.precision * row.sensitivity / pr;
  return row;
}

NamedMetrics make_named(std::string name, const ConfusionMatrix& cm) {
  return NamedMetrics{std::move(name), cm, compute_metrics(cm)};
}

Report render_report(std::span<const NamedMetrics> rows) {
  if (rows.empty()) throw std::invalid_argument("report needs at least one row");
  Report report;
  std::ostringstream csv;
  csv << kReportHeader << '\n';
  nlohmann::ordered_json doc;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    if (row.name.find_first_of(",\n\"") != std::string::npos) {
      throw std::invalid_argument("row name must not contain commas, quotes or newlines: " + row.name);
    }
    const auto& c = row.counts;
    const auto& s = row.scores;
    csv << row.name << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn << ','
        << fixed6(s.accuracy) << ',' << fixed6(s.sensitivity) << ',' << fixed6(s.specificity) << ','
        << fixed6(s.precision) << ',' << fixed6(s.f1) << '\n';

    nlohmann::ordered_json entry;
    entry["name"] = row.name;
    entry["tp"] = c.tp;
    entry["tn"] = c.tn;
    entry["fp"] = c.fp;
    entry["fn"] = c.fn;
    entry["accuracy"] = round6(s.accuracy);
    entry["sensitivity"] = round6(s.sensitivity);
    entry["specificity"] = round6(s.specificity);
    entry["precision"] = round6(s.precision);
    entry["f1"] = round6(s.f1);
    doc["rows"].push_back(std::move(entry));
  }
  report.csv = csv.str();
  report.json = doc.dump(2) + "\n";
  return report;
}

Report write_report(std::span<const NamedMetrics> rows, const std::filesystem::path& csv_path) {
  Report report = render_report(rows);
  write_text(csv_path, report.csv);
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  write_text(json_path, report.json);
  return report;
}

std::vector<NamedMetrics> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw std::invalid_argument("report CSV has an unexpected header");
  }
  std::vector<NamedMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) fields.push_back(cell);
    if (fields.size() != 10) throw std::invalid_argument("malformed report line: " + line);
    ConfusionMatrix cm;
    try {
      cm.tp = std::stoull(fields[1]);
      cm.tn = std::stoull(fields[2]);
      cm.fp = std::stoull(fields[3]);
      cm.fn = std::stoull(fields[4]);
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed counts in report line: " + line);
    }
    rows.push_back(make_named(fields[0], cm));
  }
  if (rows.empty()) throw std::invalid_argument("report CSV has no rows");
  return rows;
}

}  // namespace histoclahe
