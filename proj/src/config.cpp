#include "gccakit/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gccakit/errors.hpp"
#include "gccakit/rng.hpp"

namespace gccakit::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class KeyValues {
 public:
  explicit KeyValues(const std::filesystem::path& path) : source_(path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": expected 'key = value'");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
      }
      if (!values_.emplace(key, value).second) {
        throw ConfigError(path.string() + ": duplicate key '" + key + "'");
      }
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string raw(const std::string& key) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(key, it->second);
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_int(key, it->second);
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + it->second + "'");
  }

  std::vector<double> get_double_list(const std::string& key) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return {};
    std::vector<double> out;
    for (const auto& tok : split_list(it->second)) out.push_back(parse_double(key, tok));
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key) {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return {};
    return split_list(it->second);
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      if (consumed_.count(key) == 0) {
        throw ConfigError(source_.string() + ": unknown key '" + key + "'");
      }
    }
  }

 private:
  double parse_double(const std::string& key, const std::string& value) const {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
      throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
    }
    return v;
  }

  std::int64_t parse_int(const std::string& key, const std::string& value) const {
    try {
      std::size_t pos = 0;
      const std::int64_t v = std::stoll(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
    }
  }

  std::filesystem::path source_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

std::vector<int> to_int_list(const std::vector<double>& v, const std::string& key) {
  std::vector<int> out;
  for (double d : v) {
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) {
      throw ConfigError("key '" + key + "': expected integers");
    }
    out.push_back(i);
  }
  return out;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  KeyValues kv(path);
  ExperimentConfig cfg;
  cfg.source = path;

  if (kv.has("data.dir")) {
    cfg.data_dir = std::filesystem::path(kv.raw("data.dir"));
    if (!std::filesystem::exists(*cfg.data_dir)) {
      throw ConfigError("key 'data.dir': directory " + cfg.data_dir->string() + " does not exist");
    }
  }
  if (kv.has("synth.subjects")) {
    SynthSpec synth;
    synth.subjects = static_cast<int>(kv.get_int("synth.subjects", 2));
    synth.channels = static_cast<int>(kv.get_int("synth.channels", 4));
    synth.n_trials = static_cast<int>(kv.get_int("synth.trials", 10));
    synth.trial_length = static_cast<int>(kv.get_int("synth.trial_length", 128));
    synth.sample_rate = kv.get_double("synth.sample_rate", 16.0);
    synth.n_shared = static_cast<int>(kv.get_int("synth.shared_components", 1));
    synth.subjects_per_component =
        to_int_list(kv.get_double_list("synth.subjects_per_component"), "synth.subjects_per_component");
    synth.component_power = kv.get_double_list("synth.component_power");
    synth.fir_length = static_cast<int>(kv.get_int("synth.stimulus_fir_length", 4));
    synth.fir_seed = kv.get_seed("synth.stimulus_fir_seed", 1);
    synth.snr_db = kv.get_double("synth.snr_db", 0.0);
    synth.max_delay = static_cast<int>(kv.get_int("synth.max_delay", 0));
    synth.seed = kv.get_seed("synth.seed", 0);
    synth.lowpass_pole = kv.get_double("synth.lowpass_pole", 0.9);
    if (synth.lowpass_pole < 0.0 || synth.lowpass_pole >= 1.0) {
      throw ConfigError("key 'synth.lowpass_pole': must be in [0, 1)");
    }
    cfg.synth = std::move(synth);
  }
  if (!cfg.data_dir.has_value() && !cfg.synth.has_value()) {
    throw ConfigError("config needs either 'data.dir' or a 'synth.*' block");
  }

  const auto methods = kv.get_string_list("methods");
  if (!methods.empty()) cfg.method_tokens = methods;
  const std::string si_mode = kv.get_string("si_mu_mode", "ledoit");
  if (si_mode == "ledoit") {
    cfg.si_mu_ledoit = true;
  } else if (si_mode == "reuse_gcca") {
    cfg.si_mu_ledoit = false;
  } else {
    throw ConfigError("key 'si_mu_mode': expected ledoit or reuse_gcca, got '" + si_mode + "'");
  }
  for (const auto& tok : cfg.method_tokens) {
    try {
      parse_method(tok, cfg.si_mu_ledoit);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("key 'methods': ") + e.what());
    }
  }

  cfg.q = static_cast<int>(kv.get_int("q", 32));
  if (cfg.q < 1) throw ConfigError("key 'q': must be >= 1");
  cfg.eeg_lags.lag_min = static_cast<int>(kv.get_int("lags.eeg_min", -2));
  cfg.eeg_lags.lag_max = static_cast<int>(kv.get_int("lags.eeg_max", 2));
  if (cfg.eeg_lags.lag_min > cfg.eeg_lags.lag_max) {
    throw ConfigError("key 'lags.eeg_min': must not exceed lags.eeg_max");
  }
  cfg.stimulus_taps = static_cast<int>(kv.get_int("lags.stimulus", 11));
  if (cfg.stimulus_taps < 1) throw ConfigError("key 'lags.stimulus': must be >= 1");
  cfg.decoder_lags = static_cast<int>(kv.get_int("lags.decoder", 3));
  if (cfg.decoder_lags < 1) throw ConfigError("key 'lags.decoder': must be >= 1");

  cfg.mu_grid = kv.get_double_list("mu_grid");
  cfg.gamma_grid = kv.get_double_list("gamma_grid");
  for (double v : cfg.mu_grid) {
    if (v < 0.0) throw ConfigError("key 'mu_grid': values must be >= 0");
  }
  for (double v : cfg.gamma_grid) {
    if (v < 0.0) throw ConfigError("key 'gamma_grid': values must be >= 0");
  }

  cfg.window_seconds = kv.get_double("window_seconds", 60.0);
  if (cfg.window_seconds <= 0.0) throw ConfigError("key 'window_seconds': must be > 0");
  cfg.train_minutes = kv.get_double("train_minutes", 40.0);
  if (cfg.train_minutes <= 0.0) throw ConfigError("key 'train_minutes': must be > 0");
  cfg.val_fraction = kv.get_double("val_fraction", 0.25);
  if (cfg.val_fraction <= 0.0 || cfg.val_fraction >= 1.0) {
    throw ConfigError("key 'val_fraction': must be in (0, 1)");
  }

  const std::string variable = kv.get_string("sweep.variable", "training_minutes");
  if (variable == "training_minutes") {
    cfg.sweep_variable = SweepVariable::TrainingMinutes;
  } else if (variable == "group_size") {
    cfg.sweep_variable = SweepVariable::GroupSize;
  } else if (variable == "channels") {
    cfg.sweep_variable = SweepVariable::ChannelCount;
  } else {
    throw ConfigError("key 'sweep.variable': expected training_minutes | group_size | channels");
  }
  cfg.sweep_grid = kv.get_double_list("sweep.grid");
  cfg.sweep_runs = static_cast<int>(kv.get_int("sweep.runs", 50));
  if (cfg.sweep_runs < 1) throw ConfigError("key 'sweep.runs': must be >= 1");
  cfg.emit_train_metrics = kv.get_bool("sweep.train_metrics", false);

  cfg.perm_runs = static_cast<int>(kv.get_int("perm.runs", 50));
  cfg.perm_per_run = static_cast<int>(kv.get_int("perm.per_run", 20));
  cfg.perm_evaluate_count = static_cast<int>(kv.get_int("perm.evaluate_count", 200));
  if (cfg.perm_runs < 1 || cfg.perm_per_run < 1) {
    throw ConfigError("key 'perm.runs'/'perm.per_run': must be >= 1");
  }
  if (cfg.perm_evaluate_count < 100) {
    throw ConfigError("key 'perm.evaluate_count': must be >= 100");
  }
  cfg.level = kv.get_double("level", 0.05);
  if (cfg.level <= 0.0 || cfg.level >= 1.0) throw ConfigError("key 'level': must be in (0, 1)");

  cfg.seed_split = kv.get_seed("seed.split", 1);
  cfg.seed_sweep = kv.get_seed("seed.sweep", 2);
  cfg.seed_perm = kv.get_seed("seed.perm", 3);

  kv.reject_unknown();
  return cfg;
}

void override_seeds(ExperimentConfig& config, std::uint64_t master_seed) {
  config.seed_split = mix_seed(master_seed, 1);
  config.seed_sweep = mix_seed(master_seed, 2);
  config.seed_perm = mix_seed(master_seed, 3);
  if (config.synth.has_value()) config.synth->seed = mix_seed(master_seed, 4);
}

}  // namespace gccakit::cli
