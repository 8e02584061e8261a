#include "arlp/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "arlp/errors.hpp"

namespace arlp {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

int parse_int(std::string_view v, const std::string& key) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key '" + key + "' expects an integer, got '" + std::string(v) +
                      "'");
  return out;
}

double parse_double(std::string_view v, const std::string& key) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key '" + key + "' expects a number, got '" + std::string(v) +
                      "'");
  return out;
}

std::uint64_t parse_u64(std::string_view v, const std::string& key) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key '" + key + "' expects an unsigned integer, got '" +
                      std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects true/false, got '" + std::string(v) +
                    "'");
}

std::vector<double> parse_list(std::string_view v, const std::string& key) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const std::string_view item =
        trim(comma == std::string_view::npos ? v.substr(start)
                                             : v.substr(start, comma - start));
    if (!item.empty()) out.push_back(parse_double(item, key));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("key '" + key + "' expects a non-empty list");
  return out;
}

void parse_split(std::string_view v, TrainConfig& train) {
  const std::size_t colon = v.find(':');
  if (colon == std::string_view::npos)
    throw ConfigError("key 'split' expects the form A:B, got '" + std::string(v) + "'");
  train.ratio_train = parse_int(trim(v.substr(0, colon)), "split");
  train.ratio_test = parse_int(trim(v.substr(colon + 1)), "split");
}

// broadcast: a single value applies to every cluster
template <typename Setter>
void apply_per_cluster(const std::vector<double>& values, SyntheticConfig& cfg,
                       const std::string& key, Setter set) {
  if (cfg.wavelets.empty()) cfg.wavelets = cfg.resolved_wavelets();
  if (values.size() != 1 && static_cast<int>(values.size()) != cfg.clusters)
    throw ConfigError("key '" + key + "' expects 1 or " + std::to_string(cfg.clusters) +
                      " values");
  for (int c = 0; c < cfg.clusters; ++c)
    set(cfg.wavelets[c], values.size() == 1 ? values[0] : values[c]);
}

}  // namespace

FileConfig default_config() {
  FileConfig cfg;
  cfg.grid.validate();
  cfg.synthetic.validate();
  return cfg;
}

FileConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");

  FileConfig cfg;
  // cluster count must be known before per-cluster lists are applied
  std::vector<std::pair<std::string, std::string>> deferred;

  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#' || s.front() == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError(path + ":" + std::to_string(line_no) + ": unterminated section");
      section = std::string(trim(s.substr(1, s.size() - 2)));
      if (section != "grid" && section != "model" && section != "train" &&
          section != "synthetic")
        throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown section [" +
                          section + "]");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(s.substr(0, eq)));
    const std::string value(trim(s.substr(eq + 1)));
    if (section.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": key outside any section");

    try {
      if (section == "grid") {
        if (key == "rows") cfg.grid.rows = parse_int(value, key);
        else if (key == "cols") cfg.grid.cols = parse_int(value, key);
        else if (key == "interval_minutes") cfg.grid.interval_minutes = parse_int(value, key);
        else if (key == "neighborhood") cfg.grid.neighborhood = parse_int(value, key);
        else if (key == "window") cfg.grid.window = parse_int(value, key);
        else if (key == "history_days") cfg.grid.history = parse_int(value, key);
        else if (key == "acf_lags") cfg.grid.acf_lags = parse_int(value, key);
        else throw ConfigError("unknown key '" + key + "' in [grid]");
      } else if (section == "model") {
        if (key == "conv_hidden") cfg.model.conv_hidden = parse_int(value, key);
        else if (key == "spatial_dim") cfg.model.spatial_dim = parse_int(value, key);
        else if (key == "lstm_hidden") cfg.model.lstm_hidden = parse_int(value, key);
        else if (key == "beta") cfg.model.beta = parse_double(value, key);
        else if (key == "renormalize_synth")
          cfg.model.renormalize_synth = parse_bool(value, key);
        else throw ConfigError("unknown key '" + key + "' in [model]");
      } else if (section == "train") {
        if (key == "batch_size") cfg.train.batch_size = parse_int(value, key);
        else if (key == "learning_rate") cfg.train.learning_rate = parse_double(value, key);
        else if (key == "max_epochs") cfg.train.max_epochs = parse_int(value, key);
        else if (key == "seed") cfg.train.seed = parse_u64(value, key);
        else if (key == "optimizer") cfg.train.optimizer = value;
        else if (key == "patience") cfg.train.patience = parse_int(value, key);
        else if (key == "samples_per_epoch")
          cfg.train.samples_per_epoch = parse_int(value, key);
        else if (key == "split") parse_split(value, cfg.train);
        else throw ConfigError("unknown key '" + key + "' in [train]");
      } else {  // synthetic
        if (key == "clusters") cfg.synthetic.clusters = parse_int(value, key);
        else if (key == "days") cfg.synthetic.days = parse_int(value, key);
        else if (key == "noise_std") cfg.synthetic.noise_std = parse_double(value, key);
        else if (key == "region_offset_std")
          cfg.synthetic.region_offset_std = parse_double(value, key);
        else if (key == "daily_shift_minutes")
          cfg.synthetic.daily_shift_minutes = parse_double(value, key);
        else if (key == "seed") cfg.synthetic.seed = parse_u64(value, key);
        else if (key == "base_level") cfg.synthetic.base_level = parse_double(value, key);
        else if (key == "amplitudes" || key == "phases" || key == "harmonics" ||
                 key == "cycles")
          deferred.emplace_back(key, value);
        else throw ConfigError("unknown key '" + key + "' in [synthetic]");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }

  for (const auto& [key, value] : deferred) {
    const std::vector<double> values = parse_list(value, key);
    if (key == "amplitudes")
      apply_per_cluster(values, cfg.synthetic, key,
                        [](WaveletParams& w, double v) { w.amplitude = v; });
    else if (key == "phases")
      apply_per_cluster(values, cfg.synthetic, key,
                        [](WaveletParams& w, double v) { w.phase = v; });
    else if (key == "harmonics")
      apply_per_cluster(values, cfg.synthetic, key, [](WaveletParams& w, double v) {
        w.harmonics = static_cast<int>(std::lround(v));
      });
    else
      apply_per_cluster(values, cfg.synthetic, key,
                        [](WaveletParams& w, double v) { w.cycles = v; });
  }

  cfg.grid.validate();
  cfg.synthetic.validate();
  return cfg;
}

std::string FileConfig::canonical_text() const {
  std::ostringstream out;
  out << "grid.rows=" << grid.rows << "\ngrid.cols=" << grid.cols
      << "\ngrid.interval_minutes=" << grid.interval_minutes
      << "\ngrid.neighborhood=" << grid.neighborhood << "\ngrid.window=" << grid.window
      << "\ngrid.history_days=" << grid.history << "\ngrid.acf_lags=" << grid.acf_lags
      << "\nmodel.conv_hidden=" << model.conv_hidden
      << "\nmodel.spatial_dim=" << model.spatial_dim
      << "\nmodel.lstm_hidden=" << model.lstm_hidden << "\nmodel.beta=" << model.beta
      << "\nmodel.renormalize_synth=" << (model.renormalize_synth ? 1 : 0)
      << "\ntrain.batch_size=" << train.batch_size
      << "\ntrain.learning_rate=" << train.learning_rate
      << "\ntrain.max_epochs=" << train.max_epochs << "\ntrain.seed=" << train.seed
      << "\ntrain.optimizer=" << train.optimizer << "\ntrain.patience=" << train.patience
      << "\ntrain.samples_per_epoch=" << train.samples_per_epoch
      << "\ntrain.split=" << train.ratio_train << ":" << train.ratio_test
      << "\nsynthetic.clusters=" << synthetic.clusters
      << "\nsynthetic.days=" << synthetic.days
      << "\nsynthetic.noise_std=" << synthetic.noise_std
      << "\nsynthetic.region_offset_std=" << synthetic.region_offset_std
      << "\nsynthetic.daily_shift_minutes=" << synthetic.daily_shift_minutes
      << "\nsynthetic.seed=" << synthetic.seed
      << "\nsynthetic.base_level=" << synthetic.base_level;
  for (const WaveletParams& w : synthetic.resolved_wavelets())
    out << "\nsynthetic.wavelet=" << w.amplitude << "," << w.phase << "," << w.harmonics
        << "," << w.cycles;
  out << "\n";
  return out.str();
}

std::uint64_t FileConfig::hash() const { return fnv1a64(canonical_text()); }

}  // namespace arlp
