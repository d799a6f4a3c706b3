#include "gccakit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "gccakit/errors.hpp"
#include "gccakit/linalg.hpp"
#include "gccakit/log.hpp"
#include "gccakit/rng.hpp"
#include "gccakit/util.hpp"

namespace gccakit {

namespace {

// Stream purposes for seed derivation; fixed so outputs are stable.
enum : std::uint64_t {
  kLatentStream = 10,
  kAssignStream = 30,
  kPatternStream = 40,
  kDelayStream = 50,
  kNoiseStream = 60,
  kMixingStream = 70,
  kSubjectPick = 101,
  kChannelPick = 102,
  kSplitPick = 103,
  kThresholdStream = 0xA11CE
};

Eigen::VectorXd lowpass_gaussian(Rng& rng, Eigen::Index n, double pole) {
  Eigen::VectorXd x(n);
  const double drive = std::sqrt(1.0 - pole * pole);
  double prev = rng.gaussian();
  x[0] = prev;
  for (Eigen::Index t = 1; t < n; ++t) {
    prev = pole * prev + drive * rng.gaussian();
    x[t] = prev;
  }
  return x;
}

}  // namespace

Recording generate_synthetic(const SynthSpec& spec) {
  if (spec.subjects < 1 || spec.channels < 1 || spec.n_trials < 1) {
    throw std::invalid_argument("synthetic spec needs subjects, channels and trials >= 1");
  }
  if (spec.trial_length < 2) throw std::invalid_argument("trial length must be >= 2 samples");
  if (spec.max_delay < 0 || spec.max_delay >= spec.trial_length) {
    throw std::invalid_argument("per-subject delay range infeasible for the trial length");
  }
  if (spec.fir_length < 1) throw std::invalid_argument("stimulus FIR needs at least one tap");
  if (!std::isfinite(spec.snr_db)) throw std::invalid_argument("snr_db must be finite");
  std::vector<int> per_component = spec.subjects_per_component;
  if (per_component.empty()) per_component.assign(static_cast<std::size_t>(spec.n_shared), spec.subjects);
  if (static_cast<int>(per_component.size()) != spec.n_shared) {
    throw std::invalid_argument("subjects_per_component must list one count per shared component");
  }
  for (int p : per_component) {
    if (p < 1 || p > spec.subjects) {
      throw std::invalid_argument("each component must live in 1..K subjects");
    }
  }
  std::vector<double> power = spec.component_power;
  if (power.empty()) power.assign(static_cast<std::size_t>(spec.n_shared), 1.0);
  if (static_cast<int>(power.size()) != spec.n_shared) {
    throw std::invalid_argument("component_power must list one value per shared component");
  }

  const Eigen::Index total = static_cast<Eigen::Index>(spec.n_trials) * spec.trial_length;
  const Eigen::Index margin = spec.max_delay + spec.fir_length;

  // Latent components over the full experiment plus a left margin so delays
  // and the stimulus FIR never run off the start.
  std::vector<Eigen::VectorXd> latents;
  latents.reserve(static_cast<std::size_t>(spec.n_shared));
  for (int j = 0; j < spec.n_shared; ++j) {
    Rng rng(mix_seed(spec.seed, kLatentStream, static_cast<std::uint64_t>(j)));
    latents.push_back(lowpass_gaussian(rng, total + margin, spec.lowpass_pole));
  }

  // Minimum-phase decaying FIR taps; the leading tap dominates so a causal
  // window of the stimulus can reconstruct the driving component.
  Eigen::VectorXd fir(spec.fir_length);
  {
    Rng rng(mix_seed(spec.fir_seed, 20));
    fir[0] = 1.0;
    for (int i = 1; i < spec.fir_length; ++i) {
      fir[i] = fir[i - 1] * (0.4 + 0.3 * rng.uniform());
    }
    fir /= fir.norm();
  }

  Eigen::VectorXd stimulus = Eigen::VectorXd::Zero(total);
  if (spec.n_shared > 0) {
    for (Eigen::Index t = 0; t < total; ++t) {
      double acc = 0.0;
      for (int i = 0; i < spec.fir_length; ++i) acc += fir[i] * latents[0][t + margin - i];
      stimulus[t] = acc;
    }
  }

  // Component-to-subject assignment, spatial patterns and delays.
  std::vector<std::vector<int>> assigned(static_cast<std::size_t>(spec.n_shared));
  for (int j = 0; j < spec.n_shared; ++j) {
    Rng rng(mix_seed(spec.seed, kAssignStream, static_cast<std::uint64_t>(j)));
    assigned[static_cast<std::size_t>(j)] =
        rng.sample_without_replacement(spec.subjects, per_component[static_cast<std::size_t>(j)]);
    std::sort(assigned[static_cast<std::size_t>(j)].begin(), assigned[static_cast<std::size_t>(j)].end());
  }

  Recording rec;
  rec.sample_rate = spec.sample_rate;
  rec.subjects.resize(static_cast<std::size_t>(spec.subjects));

  for (int k = 0; k < spec.subjects; ++k) {
    // Spatial mixing with a log-spaced amplitude spectrum (0.1 .. 1): the
    // noise is strongly anisotropic. Component patterns concentrate their
    // energy in the noise-dominant directions (weight gain^1.75 in the noise
    // eigenbasis), so quiet directions carry noise but almost no signal and
    // an unregularized decoder that reaches into them only fits noise.
    Rng mrng(mix_seed(spec.seed, kMixingStream, static_cast<std::uint64_t>(k)));
    auto random_rotation = [&]() {
      Eigen::MatrixXd g(spec.channels, spec.channels);
      for (int c2 = 0; c2 < spec.channels; ++c2) {
        for (int c1 = 0; c1 < spec.channels; ++c1) g(c1, c2) = mrng.gaussian();
      }
      return Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ());
    };
    const Eigen::MatrixXd rot_left = random_rotation();
    const Eigen::MatrixXd rot_right = random_rotation();
    Eigen::VectorXd gains(spec.channels);
    for (int c = 0; c < spec.channels; ++c) gains[c] = std::pow(10.0, -mrng.uniform());
    const Eigen::MatrixXd mixing = rot_left * gains.asDiagonal() * rot_right.transpose();

    Eigen::MatrixXd signal = Eigen::MatrixXd::Zero(spec.channels, total);
    for (int j = 0; j < spec.n_shared; ++j) {
      const auto& subj_list = assigned[static_cast<std::size_t>(j)];
      if (!std::binary_search(subj_list.begin(), subj_list.end(), k)) continue;
      const std::uint64_t pair_id = static_cast<std::uint64_t>(j) * spec.subjects + k;
      Rng prng(mix_seed(spec.seed, kPatternStream, pair_id));
      Eigen::VectorXd pattern(spec.channels);
      for (int c = 0; c < spec.channels; ++c) {
        pattern[c] = std::pow(gains[c], 1.75) * prng.gaussian();
      }
      pattern = (rot_left * pattern).normalized();
      Rng drng(mix_seed(spec.seed, kDelayStream, pair_id));
      const int delay = static_cast<int>(drng.below(static_cast<std::uint64_t>(spec.max_delay) + 1));
      const auto& comp = latents[static_cast<std::size_t>(j)];
      const double amp = power[static_cast<std::size_t>(j)];
      for (Eigen::Index t = 0; t < total; ++t) {
        const double v = amp * comp[t + margin - delay];
        for (int c = 0; c < spec.channels; ++c) signal(c, t) += pattern[c] * v;
      }
    }

    // Spatially mixed Gaussian noise, scaled to the requested SNR against
    // this subject's total signal power.
    Rng nrng(mix_seed(spec.seed, kNoiseStream, static_cast<std::uint64_t>(k)));
    Eigen::MatrixXd white(spec.channels, total);
    for (Eigen::Index t = 0; t < total; ++t) {
      for (int c = 0; c < spec.channels; ++c) white(c, t) = nrng.gaussian();
    }
    Eigen::MatrixXd noise = mixing * white;

    const double p_signal = signal.squaredNorm();
    const double p_noise = noise.squaredNorm();
    if (p_signal > 0.0 && p_noise > 0.0) {
      const double beta = std::sqrt(p_signal / (p_noise * std::pow(10.0, spec.snr_db / 10.0)));
      signal += beta * noise;
    } else {
      signal += noise;
    }

    auto& trials = rec.subjects[static_cast<std::size_t>(k)];
    trials.reserve(static_cast<std::size_t>(spec.n_trials));
    for (int t = 0; t < spec.n_trials; ++t) {
      trials.push_back(normalize_trial(
          signal.middleCols(static_cast<Eigen::Index>(t) * spec.trial_length, spec.trial_length)));
    }
  }

  if (spec.n_shared > 0) {
    rec.stimulus.reserve(static_cast<std::size_t>(spec.n_trials));
    for (int t = 0; t < spec.n_trials; ++t) {
      const Eigen::MatrixXd row = stimulus
                                      .segment(static_cast<Eigen::Index>(t) * spec.trial_length,
                                               spec.trial_length)
                                      .transpose();
      rec.stimulus.push_back(normalize_trial(row));
    }
  }
  rec.validate();
  return rec;
}

MethodSpec parse_method(const std::string& token, bool si_mu_ledoit) {
  const MuPolicy si_policy = si_mu_ledoit ? MuPolicy::LedoitWolf : MuPolicy::ReuseValidated;
  if (token == "gcca_noreg") return {Method::Gcca, MuPolicy::Zero, token};
  if (token == "gcca") return {Method::Gcca, MuPolicy::Validated, token};
  if (token == "corrca_noreg") return {Method::CorrCa, MuPolicy::Zero, token};
  if (token == "corrca") return {Method::CorrCa, MuPolicy::Validated, token};
  if (token == "sigcca") return {Method::SiGcca, si_policy, token};
  if (token == "sicorrca") return {Method::SiCorrCa, si_policy, token};
  throw std::invalid_argument("unknown method token: " + token);
}

namespace {

std::vector<double> half_decade_grid(double lo_exp, double hi_exp) {
  std::vector<double> grid{0.0};
  for (double e = lo_exp; e <= hi_exp + 1e-9; e += 0.5) grid.push_back(std::pow(10.0, e));
  return grid;
}

}  // namespace

std::vector<double> default_mu_grid() { return half_decade_grid(-5.0, 5.0); }

std::vector<double> default_gamma_grid() { return half_decade_grid(-2.0, 8.0); }

namespace {

double mean_first_component_val_isc(const GroupModel& model,
                                    const std::vector<LaggedTrial>& val_trials) {
  double sum = 0.0;
  for (const auto& trial : val_trials) {
    sum += isc(project(model, trial.subjects), 0);
  }
  return sum / static_cast<double>(val_trials.size());
}

}  // namespace

HyperSelection select_hyperparameters(const CorrelationSet& train_corr,
                                      const std::vector<LaggedTrial>& val_trials,
                                      const MethodSpec& method, std::span<const double> mu_grid,
                                      std::span<const double> gamma_grid, int q, double fixed_mu) {
  if (val_trials.empty()) throw std::invalid_argument("empty validation set");
  const bool si = method_uses_stimulus(method.method);
  std::vector<double> grid(si ? gamma_grid.begin() : mu_grid.begin(),
                           si ? gamma_grid.end() : mu_grid.end());
  if (!si && method.mu_policy == MuPolicy::Zero) grid = {0.0};
  if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
  std::sort(grid.begin(), grid.end());

  HyperSelection best;
  bool found = false;
  std::string last_error;
  for (double value : grid) {
    Hyperparams hyper;
    hyper.q = q;
    if (si) {
      hyper.mu = method.mu_policy == MuPolicy::Zero ? 0.0 : fixed_mu;
      hyper.gamma = value;
    } else {
      hyper.mu = value;
    }
    try {
      const GroupModel model = fit(method.method, train_corr, hyper);
      const double score = mean_first_component_val_isc(model, val_trials);
      // Ascending grid plus strict improvement = ties go to the smaller value.
      if (!found || score > best.best_val_isc) {
        best.mu = hyper.mu;
        best.gamma = hyper.gamma;
        best.best_val_isc = score;
        found = true;
      }
    } catch (const NumericError& e) {
      last_error = e.what();
    }
  }
  if (!found) {
    throw NumericError("no hyperparameter candidate produced a valid fit: " + last_error);
  }
  return best;
}

std::string sweep_variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::TrainingMinutes: return "training_minutes";
    case SweepVariable::GroupSize: return "group_size";
    case SweepVariable::ChannelCount: return "channels";
  }
  return "unknown";
}

namespace {

int trials_for_minutes(double minutes, double sample_rate, int trial_length) {
  return static_cast<int>(std::llround(minutes * 60.0 * sample_rate / trial_length));
}

std::vector<int> iota_vec(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

struct ThresholdPool {
  std::map<std::string, std::vector<double>> samples;  // keyed by MetricSpec::name()
};

}  // namespace

SweepResult run_sweep(const Recording& recording, const SweepConfig& config) {
  recording.validate();
  if (config.grid.empty()) throw std::invalid_argument("sweep grid is empty");
  if (config.methods.empty()) throw std::invalid_argument("no methods configured");
  if (config.n_runs < 1) throw std::invalid_argument("need at least one run");

  const bool has_stimulus = recording.has_stimulus();
  bool needs_ledoit = false;
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    const auto& m = config.methods[i];
    if (method_uses_stimulus(m.method) && !has_stimulus) {
      throw std::invalid_argument("method " + m.label + " needs a stimulus feature");
    }
    if (m.mu_policy == MuPolicy::LedoitWolf) needs_ledoit = true;
    if (m.mu_policy == MuPolicy::ReuseValidated) {
      bool have_base = false;
      for (std::size_t j = 0; j < i; ++j) {
        if (!method_uses_stimulus(config.methods[j].method) &&
            config.methods[j].mu_policy == MuPolicy::Validated) {
          have_base = true;
        }
      }
      if (!have_base) {
        throw std::invalid_argument(
            "method " + m.label +
            " reuses a validated mu; list gcca or corrca (validated) before it");
      }
    }
  }

  const int window =
      config.window_samples > 0 ? config.window_samples : recording.trial_length();
  const std::optional<LagSpec> stim_lags =
      has_stimulus ? std::optional<LagSpec>(past_window(config.stimulus_taps)) : std::nullopt;

  SweepResult result;
  result.variable = config.variable;

  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    const double grid_value = config.grid[g];
    const std::size_t rows_begin = result.rows.size();
    ThresholdPool pool;
    const std::uint64_t threshold_seed = mix_seed(config.seed, kThresholdStream, g);

    for (int run = 0; run < config.n_runs; ++run) {
      const std::uint64_t run_seed = mix_seed(config.seed, g, static_cast<std::uint64_t>(run));

      // Subject / channel subsets, re-drawn per run when swept.
      std::vector<int> subj_idx = iota_vec(recording.subject_count());
      std::vector<int> chan_idx = iota_vec(recording.channel_count());
      if (config.variable == SweepVariable::GroupSize) {
        const int k_swept = static_cast<int>(grid_value);
        if (k_swept < 2 || k_swept > recording.subject_count()) {
          throw std::invalid_argument("group size grid value exceeds available subjects");
        }
        Rng rng(mix_seed(run_seed, kSubjectPick));
        subj_idx = rng.sample_without_replacement(recording.subject_count(), k_swept);
        std::sort(subj_idx.begin(), subj_idx.end());
      } else if (config.variable == SweepVariable::ChannelCount) {
        const int c_swept = static_cast<int>(grid_value);
        if (c_swept < 1 || c_swept > recording.channel_count()) {
          throw std::invalid_argument("channel grid value exceeds available channels");
        }
        Rng rng(mix_seed(run_seed, kChannelPick));
        chan_idx = rng.sample_without_replacement(recording.channel_count(), c_swept);
        std::sort(chan_idx.begin(), chan_idx.end());
      }

      const bool subsetted = static_cast<int>(subj_idx.size()) != recording.subject_count() ||
                             static_cast<int>(chan_idx.size()) != recording.channel_count();
      Recording sub;
      if (subsetted) sub = subset_recording(recording, subj_idx, chan_idx);
      const Recording& rec = subsetted ? sub : recording;

      const double minutes = config.variable == SweepVariable::TrainingMinutes
                                 ? grid_value
                                 : config.default_train_minutes;
      const int n_train = trials_for_minutes(minutes, rec.sample_rate, rec.trial_length());
      if (n_train < 1 || n_train > rec.trial_count() - 2) {
        throw std::invalid_argument("training amount grid value exceeds available trials");
      }

      const TrialSplit split =
          split_trials(rec.trial_count(), n_train, config.val_fraction, mix_seed(run_seed, kSplitPick));

      const LaggedConcat train_cat = lag_and_concat(rec, split.train, config.eeg_lags, stim_lags);
      const CorrelationSet corr = compute_correlations(train_cat.subjects, train_cat.stimulus);
      const std::vector<LaggedTrial> val_trials = lag_trials(rec, split.val, config.eeg_lags);
      const std::vector<LaggedTrial> test_trials = lag_trials(rec, split.test, config.eeg_lags);
      std::vector<LaggedTrial> train_trials;
      if (has_stimulus || config.emit_train_metrics) {
        train_trials = lag_trials(rec, split.train, config.eeg_lags);
      }

      double ledoit_mu = 0.0;
      if (needs_ledoit) {
        double sum = 0.0;
        for (int k = 0; k < corr.subject_count(); ++k) {
          const auto& x = train_cat.subjects[static_cast<std::size_t>(k)].data;
          const double quartic = x.rowwise().squaredNorm().array().square().sum();
          sum += linalg::ledoit_wolf_from_gram(corr.r_blockdiag[static_cast<std::size_t>(k)],
                                               quartic, corr.sample_count)
                     .mu;
        }
        ledoit_mu = sum / corr.subject_count();
      }

      RunRecord record;
      record.grid_value = grid_value;
      record.run = run;
      record.subjects = subj_idx;
      record.channels = chan_idx;
      record.split = split;

      double validated_mu = 0.0;
      bool have_validated_mu = false;

      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const MethodSpec& method = config.methods[mi];
        try {
          double fixed_mu = 0.0;
          if (method_uses_stimulus(method.method)) {
            if (method.mu_policy == MuPolicy::LedoitWolf) fixed_mu = ledoit_mu;
            if (method.mu_policy == MuPolicy::ReuseValidated) {
              if (!have_validated_mu) {
                throw NumericError("validated mu unavailable for " + method.label);
              }
              fixed_mu = validated_mu;
            }
          }
          const HyperSelection sel = select_hyperparameters(
              corr, val_trials, method, config.mu_grid, config.gamma_grid, config.q, fixed_mu);
          if (!method_uses_stimulus(method.method) && method.mu_policy == MuPolicy::Validated &&
              !have_validated_mu) {
            validated_mu = sel.mu;
            have_validated_mu = true;
          }
          Hyperparams hyper{sel.mu, sel.gamma, config.q};
          const GroupModel model = fit(method.method, corr, hyper);
          StimulusDecoders decoders;
          if (has_stimulus) {
            decoders = train_stimulus_decoders(model, train_trials, config.decoder_lags);
          }
          const MetricsReport report = windowed_eval(model, test_trials, window, decoders);
          record.hypers.emplace_back(method.label, hyper);

          for (const auto& row : report.per_window) {
            for (int c = 0; c < config.q; ++c) {
              result.rows.push_back({grid_value, run, method.label, row.trial, row.window, "isc",
                                     c, row.isc[c], 0.0});
            }
            if (row.has_sc) {
              for (int s = 0; s < static_cast<int>(row.sc.size()); ++s) {
                result.rows.push_back({grid_value, run, method.label, row.trial, row.window, "sc",
                                       s, row.sc[s], 0.0});
              }
              result.rows.push_back({grid_value, run, method.label, row.trial, row.window,
                                     "sc_avg", -1, row.sc_avg, 0.0});
            }
          }

          if (config.emit_train_metrics) {
            const MetricsReport train_report =
                windowed_eval(model, train_trials, window, StimulusDecoders{});
            for (const auto& row : train_report.per_window) {
              for (int c = 0; c < config.q; ++c) {
                result.rows.push_back({grid_value, run, method.label, row.trial, row.window,
                                       "train_isc", c, row.isc[c], 0.0});
              }
            }
          }

          // Null samples pooled across runs, drawn from the first method so
          // one threshold serves every method at this grid value.
          if (mi == 0) {
            RunContext ctx{model, test_trials, decoders};
            for (int c = 0; c < config.q; ++c) {
              MetricSpec spec{MetricKind::Isc, c, config.level};
              auto s = permutation_samples(ctx, spec, run, config.perms_per_run, window,
                                           threshold_seed, config.threads);
              auto& dst = pool.samples[spec.name()];
              dst.insert(dst.end(), s.begin(), s.end());
            }
            if (has_stimulus && !decoders.per_subject.empty()) {
              MetricSpec sc_spec{MetricKind::Sc, -1, config.level};
              auto s = permutation_samples(ctx, sc_spec, run, config.perms_per_run, window,
                                           threshold_seed, config.threads);
              auto& dst = pool.samples[sc_spec.name()];
              dst.insert(dst.end(), s.begin(), s.end());
              MetricSpec avg_spec{MetricKind::ScAvg, -1, config.level};
              auto sa = permutation_samples(ctx, avg_spec, run, config.perms_per_run, window,
                                            threshold_seed, config.threads);
              auto& dsta = pool.samples[avg_spec.name()];
              dsta.insert(dsta.end(), sa.begin(), sa.end());
            }
          }
        } catch (const NumericError& e) {
          log::info("skipping ", method.label, " (grid ", grid_value, ", run ", run,
                    "): ", e.what());
        }
      }
      result.records.push_back(std::move(record));
    }

    // Resolve pooled thresholds and attach them to this grid value's rows.
    std::map<std::string, double> thresholds;
    for (const auto& [name, samples] : pool.samples) {
      if (!samples.empty()) {
        thresholds[name] = empirical_quantile(samples, 1.0 - config.level);
      }
    }
    for (std::size_t i = rows_begin; i < result.rows.size(); ++i) {
      SweepRow& row = result.rows[i];
      std::string key;
      if (row.metric == "isc" || row.metric == "train_isc") {
        key = "isc_" + std::to_string(row.index);
      } else if (row.metric == "sc") {
        key = "sc";
      } else if (row.metric == "sc_avg") {
        key = "sc_avg";
      }
      const auto it = thresholds.find(key);
      row.threshold = it != thresholds.end() ? it->second : 0.0;
    }
  }

  return result;
}

}  // namespace gccakit
