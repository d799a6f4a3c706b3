#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gccakit/datamodel.hpp"
#include "gccakit/estimators.hpp"
#include "gccakit/metrics.hpp"
#include "gccakit/stats.hpp"

namespace gccakit {

/// Synthetic multi-subject recording: latent low-pass components mixed into
/// assigned subjects through random unit-norm spatial patterns with integer
/// delays, a stimulus feature obtained by FIR-filtering the first latent
/// component, and spatially mixed Gaussian noise scaled to snr_db.
struct SynthSpec {
  int subjects = 2;
  int channels = 4;
  int n_trials = 10;
  int trial_length = 128;  // samples
  double sample_rate = 16.0;
  int n_shared = 1;
  std::vector<int> subjects_per_component;  // P per component, each <= subjects
  std::vector<double> component_power;      // optional, defaults to 1.0 each
  int fir_length = 4;
  std::uint64_t fir_seed = 1;
  double snr_db = 0.0;
  int max_delay = 0;  // per-subject delays drawn from [0, max_delay]
  std::uint64_t seed = 0;
  double lowpass_pole = 0.9;  // AR(1) coefficient shaping the latent spectra
};

/// Fully seed-deterministic; trials come out normalized (zero channel means,
/// unit Frobenius norm), stimulus trials likewise.
Recording generate_synthetic(const SynthSpec& spec);

/// How a method's diagonal-loading weight is chosen.
enum class MuPolicy {
  Zero,          // mu = 0, no selection
  Validated,     // mu swept on the validation set
  LedoitWolf,    // mu from the shrinkage heuristic on the training data
  ReuseValidated // mu copied from the validated stimulus-unaware fit
};

struct MethodSpec {
  Method method = Method::Gcca;
  MuPolicy mu_policy = MuPolicy::Zero;
  std::string label;  // row label in results tables
};

/// Parses gcca | gcca_noreg | corrca | corrca_noreg | sigcca | sicorrca;
/// si_mu_ledoit selects the shrinkage heuristic for the stimulus-informed
/// variants, otherwise they reuse the validated stimulus-unaware mu.
MethodSpec parse_method(const std::string& token, bool si_mu_ledoit);

/// Hyperparameter grids: {0} followed by half-decade steps, 10^-5..10^5 for
/// mu and 10^-2..10^8 for gamma.
std::vector<double> default_mu_grid();
std::vector<double> default_gamma_grid();

struct HyperSelection {
  double mu = 0.0;
  double gamma = 0.0;
  double best_val_isc = 0.0;
};

/// Grid search maximizing the mean first-component ISC across validation
/// trials (each trial is one window). Stimulus-unaware methods sweep mu;
/// stimulus-informed methods sweep gamma with mu fixed to fixed_mu. Ties go
/// to the smaller hyperparameter.
HyperSelection select_hyperparameters(const CorrelationSet& train_corr,
                                      const std::vector<LaggedTrial>& val_trials,
                                      const MethodSpec& method, std::span<const double> mu_grid,
                                      std::span<const double> gamma_grid, int q,
                                      double fixed_mu = 0.0);

enum class SweepVariable { TrainingMinutes, GroupSize, ChannelCount };

std::string sweep_variable_name(SweepVariable v);

struct SweepConfig {
  SweepVariable variable = SweepVariable::TrainingMinutes;
  std::vector<double> grid;
  double default_train_minutes = 40.0;
  int n_runs = 50;
  std::vector<MethodSpec> methods;
  std::vector<double> mu_grid = default_mu_grid();
  std::vector<double> gamma_grid = default_gamma_grid();
  int q = 1;
  int window_samples = 0;  // 0 = one trial per window
  LagSpec eeg_lags{-2, 2};
  int stimulus_taps = 11;  // P, past-only window
  int decoder_lags = 3;    // L_d
  double val_fraction = 0.25;
  int perms_per_run = 20;
  double level = 0.05;
  std::uint64_t seed = 0;
  bool emit_train_metrics = false;
  int threads = 1;
};

/// One tidy result row. metric is isc | sc | sc_avg (train_isc when train
/// metrics are enabled); index is the component for isc, the subject for sc
/// and -1 for sc_avg. threshold is the pooled permutation threshold for the
/// row's grid value and metric.
struct SweepRow {
  double grid_value = 0.0;
  int run = 0;
  std::string method;
  int trial = 0;
  int window = 0;
  std::string metric;
  int index = 0;
  double value = 0.0;
  double threshold = 0.0;
};

/// Split and chosen hyperparameters of one run, for audit and tests.
struct RunRecord {
  double grid_value = 0.0;
  int run = 0;
  std::vector<int> subjects;
  std::vector<int> channels;
  TrialSplit split;
  std::vector<std::pair<std::string, Hyperparams>> hypers;
};

struct SweepResult {
  SweepVariable variable = SweepVariable::TrainingMinutes;
  std::vector<SweepRow> rows;
  std::vector<RunRecord> records;
};

/// Monte-Carlo sweep over one experiment variable. Every run draws its own
/// training trials (and subjects / channels when swept), splits the
/// remainder into validation and test, selects hyperparameters per method on
/// identical splits, and evaluates windowed metrics on the test set.
/// Permutation thresholds are pooled across the runs of each grid value from
/// the first configured method and attached to every method's rows.
/// Bit-reproducible from (recording, config.seed).
SweepResult run_sweep(const Recording& recording, const SweepConfig& config);

}  // namespace gccakit
