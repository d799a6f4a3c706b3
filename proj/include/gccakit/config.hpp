#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gccakit/datamodel.hpp"
#include "gccakit/harness.hpp"

namespace gccakit::cli {

/// Experiment configuration, parsed from a plain-text "key = value" file
/// ('#' starts a comment). Defaults match the library's speech-style setup:
/// 5 centered recording lags, an 11-tap past-only stimulus window, 3 decoder
/// lags, 60 s windows, 40 min training, 32 components.
struct ExperimentConfig {
  // Data source: a directory written by the synth subcommand, or an inline
  // synthetic spec. Exactly one must be present.
  std::optional<std::filesystem::path> data_dir;
  std::optional<SynthSpec> synth;

  std::vector<std::string> method_tokens{"gcca"};
  bool si_mu_ledoit = true;  // si_mu_mode = ledoit | reuse_gcca

  int q = 32;
  LagSpec eeg_lags{-2, 2};
  int stimulus_taps = 11;
  int decoder_lags = 3;
  std::vector<double> mu_grid;     // empty = default grid
  std::vector<double> gamma_grid;  // empty = default grid

  double window_seconds = 60.0;
  double train_minutes = 40.0;
  double val_fraction = 0.25;

  SweepVariable sweep_variable = SweepVariable::TrainingMinutes;
  std::vector<double> sweep_grid;
  int sweep_runs = 50;
  bool emit_train_metrics = false;

  int perm_runs = 50;
  int perm_per_run = 20;
  int perm_evaluate_count = 200;  // single-run permutations for `evaluate`
  double level = 0.05;

  std::uint64_t seed_split = 1;
  std::uint64_t seed_sweep = 2;
  std::uint64_t seed_perm = 3;

  std::filesystem::path source;  // where the config was loaded from
};

/// Parses and validates; throws ConfigError naming the offending key.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies a master seed override: every configured seed (including the
/// synthetic recording seed) is re-derived from it.
void override_seeds(ExperimentConfig& config, std::uint64_t master_seed);

}  // namespace gccakit::cli
