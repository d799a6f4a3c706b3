#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gccakit {

/// Multi-subject stimulus-synchronized recording. Every subject holds the
/// same number of trials with identical channel count and per-trial length;
/// stimulus trials are sample-aligned with the recordings.
struct Recording {
  std::vector<std::vector<Eigen::MatrixXd>> subjects;  // K x n_trials, each C x T
  std::vector<Eigen::MatrixXd> stimulus;               // n_trials, each F x T (may be empty)
  double sample_rate = 0.0;

  int subject_count() const { return static_cast<int>(subjects.size()); }
  int trial_count() const { return subjects.empty() ? 0 : static_cast<int>(subjects[0].size()); }
  int channel_count() const;
  int trial_length() const;
  bool has_stimulus() const { return !stimulus.empty(); }

  /// Throws std::invalid_argument when the alignment invariants are broken.
  void validate() const;
};

/// Inclusive lag window in samples; lag 0 is the current sample, negative
/// lags look back, positive lags look ahead.
struct LagSpec {
  int lag_min = 0;
  int lag_max = 0;

  int count() const { return lag_max - lag_min + 1; }
};

/// Returns the spec for a past-only window of p taps: lags -(p-1)..0.
inline LagSpec past_window(int p) { return LagSpec{-(p - 1), 0}; }

/// Returns the spec for a causal window of p taps: lags 0..p-1.
inline LagSpec causal_window(int p) { return LagSpec{0, p - 1}; }

/// Zero-padded block-Hankel embedding of a multichannel signal: row t of
/// channel block c, lag column l holds the channel-c value at time t+l when
/// in range, else 0. Columns within a block are ordered by ascending lag.
struct LagMatrix {
  Eigen::MatrixXd data;  // T x (C * L')
  LagSpec spec;
  int channels = 0;
};

LagMatrix build_lag_matrix(const Eigen::MatrixXd& signal, const LagSpec& spec);

/// Centers every channel and scales the whole trial to unit Frobenius norm.
/// Throws on an all-constant trial (zero after centering).
Eigen::MatrixXd normalize_trial(const Eigen::MatrixXd& trial);

struct TrialSplit {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Samples n_train trials uniformly without replacement; the remainder is
/// split val_fraction / (1 - val_fraction) with floor rounding for the
/// validation side and at least one trial in each part. Deterministic per
/// seed; each index list is returned sorted.
TrialSplit split_trials(int n_trials, int n_train, double val_fraction, std::uint64_t seed);

/// All sample (cross-)correlation blocks of the lagged data. Blocks are
/// plain inner products; inputs are assumed centered per trial.
struct CorrelationSet {
  Eigen::MatrixXd r_full;                    // KM x KM, symmetric
  std::vector<Eigen::MatrixXd> r_blockdiag;  // K diagonal blocks, M x M
  std::vector<Eigen::MatrixXd> r_ky;         // K stimulus cross blocks, M x P
  Eigen::MatrixXd r_yy;                      // P x P
  std::int64_t sample_count = 0;

  int subject_count() const { return static_cast<int>(r_blockdiag.size()); }
  int block_dim() const { return r_blockdiag.empty() ? 0 : static_cast<int>(r_blockdiag[0].rows()); }
  int stimulus_dim() const { return static_cast<int>(r_yy.rows()); }
  bool has_stimulus() const { return r_yy.rows() > 0; }
};

CorrelationSet compute_correlations(const std::vector<LagMatrix>& lagged_subjects,
                                    const std::optional<LagMatrix>& lagged_stimulus);

/// One trial's evaluation view: per-subject lagged matrices plus the raw
/// one-dimensional stimulus feature (empty when the recording has none).
struct LaggedTrial {
  std::vector<Eigen::MatrixXd> subjects;  // K x (T x M)
  Eigen::VectorXd stimulus;               // T (size 0 when absent)
};

/// Lags the selected trials per trial (padding never crosses a trial
/// boundary) and returns them individually for windowed evaluation.
std::vector<LaggedTrial> lag_trials(const Recording& rec, std::span<const int> trials,
                                    const LagSpec& eeg_lags, int stimulus_row = 0);

/// Lags the selected trials per trial and concatenates them per subject (and
/// for the stimulus when a spec is given), ready for compute_correlations.
struct LaggedConcat {
  std::vector<LagMatrix> subjects;
  std::optional<LagMatrix> stimulus;
};

LaggedConcat lag_and_concat(const Recording& rec, std::span<const int> trials,
                            const LagSpec& eeg_lags, const std::optional<LagSpec>& stimulus_lags,
                            int stimulus_row = 0);

/// Restriction of a recording to a subject subset and channel subset.
Recording subset_recording(const Recording& rec, std::span<const int> subject_idx,
                           std::span<const int> channel_idx);

}  // namespace gccakit
