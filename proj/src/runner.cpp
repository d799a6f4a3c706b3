#include "gccakit/runner.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "gccakit/errors.hpp"
#include "gccakit/linalg.hpp"
#include "gccakit/log.hpp"
#include "gccakit/matrix_io.hpp"
#include "gccakit/metrics.hpp"
#include "gccakit/rng.hpp"
#include "gccakit/stats.hpp"
#include "gccakit/util.hpp"

namespace gccakit::cli {

namespace {

std::string index_name(const char* prefix, int a, int b = -1) {
  char buf[64];
  if (b >= 0) {
    std::snprintf(buf, sizeof(buf), "%s_%03d_trial_%03d.bin", prefix, a, b);
  } else {
    std::snprintf(buf, sizeof(buf), "%s_trial_%03d.bin", prefix, a);
  }
  return buf;
}

std::map<std::string, std::string> parse_manifest(const std::filesystem::path& path) {
  std::map<std::string, std::string> kv;
  std::istringstream in(io::read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

int manifest_int(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw IoError("recording manifest misses key '" + key + "'");
  return std::stoi(it->second);
}

int window_samples_of(const ExperimentConfig& cfg, const Recording& rec) {
  const int w = static_cast<int>(std::llround(cfg.window_seconds * rec.sample_rate));
  if (w < 2) throw ConfigError("key 'window_seconds': window shorter than 2 samples");
  return w;
}

int train_trials_of(const ExperimentConfig& cfg, const Recording& rec) {
  const int n = static_cast<int>(
      std::llround(cfg.train_minutes * 60.0 * rec.sample_rate / rec.trial_length()));
  if (n < 1 || n > rec.trial_count() - 2) {
    throw ConfigError("key 'train_minutes': needs 1..n_trials-2 training trials, got " +
                      std::to_string(n));
  }
  return n;
}

std::vector<MethodSpec> methods_of(const ExperimentConfig& cfg) {
  std::vector<MethodSpec> methods;
  for (const auto& tok : cfg.method_tokens) methods.push_back(parse_method(tok, cfg.si_mu_ledoit));
  return methods;
}

int pencil_dim(const MethodSpec& m, int k, int cols, int p) {
  switch (m.method) {
    case Method::Gcca: return k * cols;
    case Method::CorrCa: return cols;
    case Method::SiGcca: return k * cols + p;
    case Method::SiCorrCa: return cols + p;
  }
  return 0;
}

Recording load_recording(const ExperimentConfig& cfg) {
  if (cfg.data_dir.has_value()) return read_recording(*cfg.data_dir);
  log::StageTimer timer("synthesize recording");
  return generate_synthetic(*cfg.synth);
}

struct FittedMethod {
  MethodSpec spec;
  Hyperparams hyper;
  GroupModel model;
  StimulusDecoders decoders;
};

// Shared single-split pipeline behind `fit` and `evaluate`: hyperparameter
// selection on the validation trials, final fit on the training
// correlations, stimulus decoders on the training projections.
std::vector<FittedMethod> fit_methods(const Recording& rec, const ExperimentConfig& cfg,
                                      const TrialSplit& split) {
  const auto methods = methods_of(cfg);
  const bool has_stimulus = rec.has_stimulus();
  const std::optional<LagSpec> stim_lags =
      has_stimulus ? std::optional<LagSpec>(past_window(cfg.stimulus_taps)) : std::nullopt;

  const LaggedConcat train_cat = lag_and_concat(rec, split.train, cfg.eeg_lags, stim_lags);
  const CorrelationSet corr = compute_correlations(train_cat.subjects, train_cat.stimulus);
  const std::vector<LaggedTrial> val_trials = lag_trials(rec, split.val, cfg.eeg_lags);
  std::vector<LaggedTrial> train_trials;
  if (has_stimulus) train_trials = lag_trials(rec, split.train, cfg.eeg_lags);

  const std::vector<double> mu_grid = cfg.mu_grid.empty() ? default_mu_grid() : cfg.mu_grid;
  const std::vector<double> gamma_grid =
      cfg.gamma_grid.empty() ? default_gamma_grid() : cfg.gamma_grid;

  for (const auto& m : methods) {
    const int dim = pencil_dim(m, corr.subject_count(), corr.block_dim(), corr.stimulus_dim());
    if (cfg.q > dim) {
      throw ConfigError("key 'q': " + std::to_string(cfg.q) + " exceeds the " + m.label +
                        " pencil dimension " + std::to_string(dim));
    }
    if (method_uses_stimulus(m.method) && !has_stimulus) {
      throw ConfigError("key 'methods': " + m.label + " needs a stimulus feature");
    }
  }

  double ledoit_mu = 0.0;
  bool ledoit_done = false;
  double validated_mu = 0.0;
  bool have_validated_mu = false;

  std::vector<FittedMethod> out;
  for (const auto& m : methods) {
    double fixed_mu = 0.0;
    if (method_uses_stimulus(m.method)) {
      if (m.mu_policy == MuPolicy::LedoitWolf) {
        if (!ledoit_done) {
          double sum = 0.0;
          for (int k = 0; k < corr.subject_count(); ++k) {
            const auto& x = train_cat.subjects[static_cast<std::size_t>(k)].data;
            const double quartic = x.rowwise().squaredNorm().array().square().sum();
            sum += linalg::ledoit_wolf_from_gram(corr.r_blockdiag[static_cast<std::size_t>(k)],
                                                 quartic, corr.sample_count)
                       .mu;
          }
          ledoit_mu = sum / corr.subject_count();
          ledoit_done = true;
        }
        fixed_mu = ledoit_mu;
      } else if (m.mu_policy == MuPolicy::ReuseValidated) {
        if (!have_validated_mu) {
          throw ConfigError("key 'methods': " + m.label +
                            " reuses a validated mu; list gcca or corrca before it");
        }
        fixed_mu = validated_mu;
      }
    }

    const HyperSelection sel =
        select_hyperparameters(corr, val_trials, m, mu_grid, gamma_grid, cfg.q, fixed_mu);
    if (!method_uses_stimulus(m.method) && m.mu_policy == MuPolicy::Validated &&
        !have_validated_mu) {
      validated_mu = sel.mu;
      have_validated_mu = true;
    }

    FittedMethod fitted;
    fitted.spec = m;
    fitted.hyper = {sel.mu, sel.gamma, cfg.q};
    fitted.model = fit(m.method, corr, fitted.hyper);
    if (has_stimulus) {
      fitted.decoders = train_stimulus_decoders(fitted.model, train_trials, cfg.decoder_lags);
    }
    out.push_back(std::move(fitted));
  }
  return out;
}

void write_model(const FittedMethod& fitted, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& model = fitted.model;
  std::ostringstream manifest;
  manifest << "method = " << method_name(model.method) << "\n";
  manifest << "label = " << fitted.spec.label << "\n";
  manifest << "subjects = " << model.subject_count() << "\n";
  manifest << "columns = " << model.column_dim() << "\n";
  manifest << "stimulus_dim = " << (model.encoder.has_value() ? model.encoder->rows() : 0) << "\n";
  manifest << "components = " << model.component_count() << "\n";
  manifest << "mu = " << format_double(model.hyper.mu) << "\n";
  manifest << "gamma = " << format_double(model.hyper.gamma) << "\n";
  manifest << "eigenvalues = ";
  for (int i = 0; i < model.component_count(); ++i) {
    if (i > 0) manifest << ",";
    manifest << format_double(model.eigenvalues[i]);
  }
  manifest << "\n";
  io::write_text_atomic(manifest.str(), dir / "manifest.txt");

  for (int k = 0; k < model.subject_count(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "decoder_%03d.bin", k);
    io::write_matrix(model.decoders[static_cast<std::size_t>(k)], dir / name);
  }
  if (model.encoder.has_value()) io::write_matrix(*model.encoder, dir / "encoder.bin");
  io::write_matrix(model.eigenvalues, dir / "eigenvalues.bin");
}

std::string metrics_csv(const std::vector<FittedMethod>& fitted,
                        const std::vector<MetricsReport>& reports,
                        const std::map<std::string, double>& thresholds) {
  std::string csv = "run,method,window,component,metric,value,threshold\n";
  auto threshold_of = [&](const std::string& key) {
    const auto it = thresholds.find(key);
    return it != thresholds.end() ? it->second : 0.0;
  };
  for (std::size_t m = 0; m < fitted.size(); ++m) {
    const auto& report = reports[m];
    for (std::size_t w = 0; w < report.per_window.size(); ++w) {
      const auto& row = report.per_window[w];
      auto emit = [&](const std::string& metric, int component, double value, double thr) {
        csv += "0," + fitted[m].spec.label + "," + std::to_string(w) + "," +
               std::to_string(component) + "," + metric + "," + format_double(value) + "," +
               format_double(thr) + "\n";
      };
      for (int c = 0; c < row.isc.size(); ++c) {
        emit("isc", c, row.isc[c], threshold_of("isc_" + std::to_string(c)));
      }
      if (row.has_sc) {
        for (int s = 0; s < row.sc.size(); ++s) {
          emit("sc", s, row.sc[s], threshold_of("sc"));
        }
        emit("sc_avg", -1, row.sc_avg, threshold_of("sc_avg"));
      }
    }
  }
  return csv;
}

void run_synth(const ExperimentConfig& cfg, const CliOptions& options) {
  if (!cfg.synth.has_value()) {
    throw ConfigError("synth subcommand needs a 'synth.*' block in the config");
  }
  log::StageTimer timer("synth");
  const Recording rec = generate_synthetic(*cfg.synth);
  write_recording(rec, options.out_dir);
  log::info("wrote recording: ", rec.subject_count(), " subjects, ", rec.trial_count(),
            " trials of ", rec.trial_length(), " samples");
}

void run_fit(const ExperimentConfig& cfg, const CliOptions& options) {
  log::StageTimer timer("fit");
  const Recording rec = load_recording(cfg);
  rec.validate();
  const TrialSplit split =
      split_trials(rec.trial_count(), train_trials_of(cfg, rec), cfg.val_fraction, cfg.seed_split);
  const auto fitted = fit_methods(rec, cfg, split);
  for (const auto& f : fitted) {
    write_model(f, options.out_dir / ("model_" + f.spec.label));
    log::info("fitted ", f.spec.label, ": mu=", f.hyper.mu, " gamma=", f.hyper.gamma);
  }
}

void run_evaluate(const ExperimentConfig& cfg, const CliOptions& options) {
  log::StageTimer timer("evaluate");
  const Recording rec = load_recording(cfg);
  rec.validate();
  const int window = window_samples_of(cfg, rec);
  const TrialSplit split =
      split_trials(rec.trial_count(), train_trials_of(cfg, rec), cfg.val_fraction, cfg.seed_split);
  const auto fitted = fit_methods(rec, cfg, split);
  const std::vector<LaggedTrial> test_trials = lag_trials(rec, split.test, cfg.eeg_lags);

  std::vector<MetricsReport> reports;
  reports.reserve(fitted.size());
  for (const auto& f : fitted) {
    reports.push_back(windowed_eval(f.model, test_trials, window, f.decoders));
  }

  // Significance thresholds from the first method's fit; one threshold per
  // metric serves every method.
  std::map<std::string, double> thresholds;
  {
    log::StageTimer perm_timer("evaluate permutation thresholds");
    RunContext ctx{fitted[0].model, test_trials, fitted[0].decoders};
    std::vector<MetricSpec> specs;
    for (int c = 0; c < cfg.q; ++c) specs.push_back({MetricKind::Isc, c, cfg.level});
    if (rec.has_stimulus()) {
      specs.push_back({MetricKind::Sc, -1, cfg.level});
      specs.push_back({MetricKind::ScAvg, -1, cfg.level});
    }
    for (const auto& spec : specs) {
      const NullDistribution null = permutation_threshold(
          {ctx}, spec, cfg.perm_evaluate_count, window, cfg.seed_perm, options.threads);
      thresholds[null.metric] = null.threshold;
    }
  }

  io::write_text_atomic(metrics_csv(fitted, reports, thresholds), options.out_dir / "metrics.csv");
  log::info("wrote ", (options.out_dir / "metrics.csv").string());
}

void run_sweep_cmd(const ExperimentConfig& cfg, const CliOptions& options) {
  log::StageTimer timer("sweep");
  const Recording rec = load_recording(cfg);
  rec.validate();
  if (cfg.sweep_grid.empty()) throw ConfigError("key 'sweep.grid': empty sweep grid");

  SweepConfig sc;
  sc.variable = cfg.sweep_variable;
  sc.grid = cfg.sweep_grid;
  sc.default_train_minutes = cfg.train_minutes;
  sc.n_runs = cfg.sweep_runs;
  sc.methods = methods_of(cfg);
  if (!cfg.mu_grid.empty()) sc.mu_grid = cfg.mu_grid;
  if (!cfg.gamma_grid.empty()) sc.gamma_grid = cfg.gamma_grid;
  sc.q = cfg.q;
  sc.window_samples = window_samples_of(cfg, rec);
  sc.eeg_lags = cfg.eeg_lags;
  sc.stimulus_taps = cfg.stimulus_taps;
  sc.decoder_lags = cfg.decoder_lags;
  sc.val_fraction = cfg.val_fraction;
  sc.perms_per_run = cfg.perm_per_run;
  sc.level = cfg.level;
  sc.seed = cfg.seed_sweep;
  sc.emit_train_metrics = cfg.emit_train_metrics;
  sc.threads = options.threads;

  const SweepResult result = run_sweep(rec, sc);

  std::string csv = "sweep_variable,grid_value,run,method,trial,window,metric,component,value,threshold\n";
  const std::string variable = sweep_variable_name(result.variable);
  for (const auto& row : result.rows) {
    csv += variable + "," + format_double(row.grid_value) + "," + std::to_string(row.run) + "," +
           row.method + "," + std::to_string(row.trial) + "," + std::to_string(row.window) + "," +
           row.metric + "," + std::to_string(row.index) + "," + format_double(row.value) + "," +
           format_double(row.threshold) + "\n";
  }
  io::write_text_atomic(csv, options.out_dir / "sweep.csv");
  log::info("wrote ", (options.out_dir / "sweep.csv").string(), " (", result.rows.size(), " rows)");
}

void run_threshold(const ExperimentConfig& cfg, const CliOptions& options) {
  log::StageTimer timer("threshold");
  const Recording rec = load_recording(cfg);
  rec.validate();
  const int window = window_samples_of(cfg, rec);
  const int n_train = train_trials_of(cfg, rec);

  std::vector<MetricSpec> specs;
  for (int c = 0; c < cfg.q; ++c) specs.push_back({MetricKind::Isc, c, cfg.level});
  if (rec.has_stimulus()) {
    specs.push_back({MetricKind::Sc, -1, cfg.level});
    specs.push_back({MetricKind::ScAvg, -1, cfg.level});
  }
  std::map<std::string, std::vector<double>> samples;

  for (int run = 0; run < cfg.perm_runs; ++run) {
    const TrialSplit split = split_trials(rec.trial_count(), n_train, cfg.val_fraction,
                                          mix_seed(cfg.seed_perm, 7, static_cast<std::uint64_t>(run)));
    const auto fitted = fit_methods(rec, cfg, split);
    RunContext ctx{fitted[0].model, lag_trials(rec, split.test, cfg.eeg_lags),
                   fitted[0].decoders};
    for (const auto& spec : specs) {
      auto s = permutation_samples(ctx, spec, run, cfg.perm_per_run, window, cfg.seed_perm,
                                   options.threads);
      auto& dst = samples[spec.name()];
      dst.insert(dst.end(), s.begin(), s.end());
    }
  }

  std::string csv = "metric,component,level,n_samples,threshold,null_mean,null_sd\n";
  for (const auto& spec : specs) {
    const auto& s = samples[spec.name()];
    const double threshold = empirical_quantile(s, 1.0 - cfg.level);
    const std::string metric = spec.kind == MetricKind::Isc
                                   ? "isc"
                                   : (spec.kind == MetricKind::Sc ? "sc" : "sc_avg");
    csv += metric + "," + std::to_string(spec.kind == MetricKind::Isc ? spec.component : -1) +
           "," + format_double(cfg.level) + "," + std::to_string(s.size()) + "," +
           format_double(threshold) + "," + format_double(mean_of(s)) + "," +
           format_double(stddev_of(s)) + "\n";
  }
  io::write_text_atomic(csv, options.out_dir / "thresholds.csv");
  log::info("wrote ", (options.out_dir / "thresholds.csv").string());
}

}  // namespace

void write_recording(const Recording& rec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  manifest << "subjects = " << rec.subject_count() << "\n";
  manifest << "trials = " << rec.trial_count() << "\n";
  manifest << "channels = " << rec.channel_count() << "\n";
  manifest << "trial_length = " << rec.trial_length() << "\n";
  manifest << "sample_rate = " << format_double(rec.sample_rate) << "\n";
  manifest << "stimulus = " << (rec.has_stimulus() ? 1 : 0) << "\n";
  io::write_text_atomic(manifest.str(), dir / "recording.txt");

  for (int k = 0; k < rec.subject_count(); ++k) {
    for (int t = 0; t < rec.trial_count(); ++t) {
      io::write_matrix(rec.subjects[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)],
                       dir / index_name("subject", k, t));
    }
  }
  if (rec.has_stimulus()) {
    for (int t = 0; t < rec.trial_count(); ++t) {
      io::write_matrix(rec.stimulus[static_cast<std::size_t>(t)], dir / index_name("stimulus", t));
    }
  }
}

Recording read_recording(const std::filesystem::path& dir) {
  const auto kv = parse_manifest(dir / "recording.txt");
  const int subjects = manifest_int(kv, "subjects");
  const int trials = manifest_int(kv, "trials");
  const bool stimulus = manifest_int(kv, "stimulus") != 0;

  Recording rec;
  rec.sample_rate = std::stod(kv.at("sample_rate"));
  rec.subjects.resize(static_cast<std::size_t>(subjects));
  for (int k = 0; k < subjects; ++k) {
    auto& list = rec.subjects[static_cast<std::size_t>(k)];
    list.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
      list.push_back(io::read_matrix(dir / index_name("subject", k, t)));
    }
  }
  if (stimulus) {
    rec.stimulus.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
      rec.stimulus.push_back(io::read_matrix(dir / index_name("stimulus", t)));
    }
  }
  rec.validate();
  return rec;
}

void run(const CliOptions& options) {
  ExperimentConfig cfg = load_config(options.config_path);
  if (options.seed_override.has_value()) override_seeds(cfg, *options.seed_override);

  CliOptions opts = options;
  if (opts.threads <= 0) {
    opts.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  std::filesystem::create_directories(opts.out_dir);

  if (options.subcommand == "synth") {
    run_synth(cfg, opts);
  } else if (options.subcommand == "fit") {
    run_fit(cfg, opts);
  } else if (options.subcommand == "evaluate") {
    run_evaluate(cfg, opts);
  } else if (options.subcommand == "sweep") {
    run_sweep_cmd(cfg, opts);
  } else if (options.subcommand == "threshold") {
    run_threshold(cfg, opts);
  } else {
    throw ConfigError("unknown subcommand '" + options.subcommand + "'");
  }
}

}  // namespace gccakit::cli
