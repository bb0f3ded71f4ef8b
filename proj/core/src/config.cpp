#include "histoclahe/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace histoclahe {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not a valid number: '" + text + "'");
  return value;
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

std::pair<int, int> parse_tiles(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ConfigError("tiles must look like GXxGY, got '" + text + "'");
  const int gx = parse_number<int>("tiles", text.substr(0, x));
  const int gy = parse_number<int>("tiles", text.substr(x + 1));
  if (gx < 1 || gy < 1) throw ConfigError("tile counts must be >= 1");
  return {gx, gy};
}

std::optional<double> parse_clip(const std::string& text) {
  if (text == "none") return std::nullopt;
  const double v = parse_number<double>("clip", text);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("clip factor must be positive, got '" + text + "'");
  return v;
}

void ExperimentConfig::validate() const {
  if (dataset_source.empty()) throw ConfigError("dataset.source must not be empty");
  if (dataset_source == "synthetic") {
    try {
      synthetic.validate();
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("dataset.split must lie in (0, 1)");
  try {
    clahe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (train.batch_size < 1) throw ConfigError("train.batch must be >= 1");
  if (!(train.learning_rate >= 0.0) || !std::isfinite(train.learning_rate)) {
    throw ConfigError("train.lr must be finite and >= 0");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(key + ": missing value");

    if (key == "dataset.source") {
      config.dataset_source = value;
    } else if (key == "dataset.per_class") {
      config.synthetic.per_class = parse_number<int>(key, value);
    } else if (key == "dataset.size") {
      config.synthetic.size = parse_number<int>(key, value);
    } else if (key == "dataset.gap") {
      config.synthetic.gap = parse_number<int>(key, value);
    } else if (key == "dataset.noise") {
      config.synthetic.noise = parse_number<double>(key, value);
    } else if (key == "dataset.split") {
      config.split_ratio = parse_number<double>(key, value);
    } else if (key == "clahe.tiles") {
      std::tie(config.clahe.grid_x, config.clahe.grid_y) = parse_tiles(value);
    } else if (key == "clahe.clip") {
      config.clahe.clip_factor = parse_clip(value);
    } else if (key == "train.epochs") {
      config.train.epochs = parse_number<std::size_t>(key, value);
    } else if (key == "train.lr") {
      config.train.learning_rate = parse_number<double>(key, value);
    } else if (key == "train.batch") {
      config.train.batch_size = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
      config.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "output_dir") {
      config.output_dir = value;
    } else {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string render_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "dataset.source = " << config.dataset_source << '\n'
      << "dataset.per_class = " << config.synthetic.per_class << '\n'
      << "dataset.size = " << config.synthetic.size << '\n'
      << "dataset.gap = " << config.synthetic.gap << '\n'
      << "dataset.noise = " << format_double(config.synthetic.noise) << '\n'
      << "dataset.split = " << format_double(config.split_ratio) << '\n'
      << "clahe.tiles = " << config.clahe.grid_x << 'x' << config.clahe.grid_y << '\n'
      << "clahe.clip = " << (config.clahe.clip_factor ? format_double(*config.clahe.clip_factor) : "none") << '\n'
      << "train.epochs = " << config.train.epochs << '\n'
      << "train.lr = " << format_double(config.train.learning_rate) << '\n'
      << "train.batch = " << config.train.batch_size << '\n'
      << "seed = " << config.seed << '\n'
      << "output_dir = " << config.output_dir.string() << '\n';
  return out.str();
}

}  // namespace histoclahe
