#include "gccakit/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gccakit/rng.hpp"

namespace gccakit {

int Recording::channel_count() const {
  if (subjects.empty() || subjects[0].empty()) return 0;
  return static_cast<int>(subjects[0][0].rows());
}

int Recording::trial_length() const {
  if (subjects.empty() || subjects[0].empty()) return 0;
  return static_cast<int>(subjects[0][0].cols());
}

void Recording::validate() const {
  if (subjects.empty()) throw std::invalid_argument("recording has no subjects");
  const auto n_trials = subjects[0].size();
  for (const auto& trials : subjects) {
    if (trials.size() != n_trials) {
      throw std::invalid_argument("subjects differ in trial count");
    }
  }
  if (n_trials == 0) throw std::invalid_argument("recording has no trials");
  const auto c = subjects[0][0].rows();
  for (const auto& trials : subjects) {
    for (std::size_t t = 0; t < n_trials; ++t) {
      if (trials[t].rows() != c) throw std::invalid_argument("channel count differs across trials");
      if (trials[t].cols() != subjects[0][t].cols()) {
        throw std::invalid_argument("trial length differs across subjects");
      }
    }
  }
  if (!stimulus.empty()) {
    if (stimulus.size() != n_trials) {
      throw std::invalid_argument("stimulus trial count differs from recordings");
    }
    for (std::size_t t = 0; t < n_trials; ++t) {
      if (stimulus[t].cols() != subjects[0][t].cols()) {
        throw std::invalid_argument("stimulus trial " + std::to_string(t) +
                                    " is not sample-aligned");
      }
    }
  }
}

LagMatrix build_lag_matrix(const Eigen::MatrixXd& signal, const LagSpec& spec) {
  const auto channels = signal.rows();
  const auto t_len = signal.cols();
  const int lags = spec.count();
  if (lags < 1) throw std::invalid_argument("lag window is empty");
  if (t_len < lags) {
    throw std::invalid_argument("signal length " + std::to_string(t_len) +
                                " below lag count " + std::to_string(lags));
  }

  LagMatrix out;
  out.spec = spec;
  out.channels = static_cast<int>(channels);
  out.data = Eigen::MatrixXd::Zero(t_len, channels * lags);
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (int j = 0; j < lags; ++j) {
      const int lag = spec.lag_min + j;
      // Rows where t + lag falls inside [0, T).
      const Eigen::Index first = std::max<Eigen::Index>(0, -lag);
      const Eigen::Index last = std::min<Eigen::Index>(t_len, t_len - lag);
      if (last <= first) continue;
      out.data.block(first, c * lags + j, last - first, 1) =
          signal.row(c).segment(first + lag, last - first).transpose();
    }
  }
  return out;
}

Eigen::MatrixXd normalize_trial(const Eigen::MatrixXd& trial) {
  if (trial.cols() < 2) throw std::invalid_argument("trial needs at least 2 samples");
  Eigen::MatrixXd out = trial;
  out.colwise() -= out.rowwise().mean();
  const double norm = out.norm();
  if (norm <= 0.0 || !std::isfinite(norm)) {
    throw std::invalid_argument("degenerate trial: zero after centering");
  }
  return out / norm;
}

TrialSplit split_trials(int n_trials, int n_train, double val_fraction, std::uint64_t seed) {
  if (n_train < 1 || n_train >= n_trials) {
    throw std::invalid_argument("training trial count must be in [1, n_trials)");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must be in (0, 1)");
  }
  const int remainder = n_trials - n_train;
  if (remainder < 2) {
    throw std::invalid_argument("remainder too small to hold validation and test trials");
  }
  int n_val = static_cast<int>(std::floor(remainder * val_fraction));
  n_val = std::clamp(n_val, 1, remainder - 1);

  Rng rng(seed);
  const std::vector<int> order = rng.permutation(n_trials);

  TrialSplit split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

CorrelationSet compute_correlations(const std::vector<LagMatrix>& lagged_subjects,
                                    const std::optional<LagMatrix>& lagged_stimulus) {
  const int k = static_cast<int>(lagged_subjects.size());
  if (k == 0) throw std::invalid_argument("no subjects given");
  const auto t_len = lagged_subjects[0].data.rows();
  const auto m = lagged_subjects[0].data.cols();
  for (const auto& s : lagged_subjects) {
    if (s.data.rows() != t_len) throw std::invalid_argument("subjects differ in sample count");
    if (s.data.cols() != m) throw std::invalid_argument("subjects differ in column count");
  }

  CorrelationSet corr;
  corr.sample_count = t_len;
  corr.r_full.resize(k * m, k * m);
  corr.r_blockdiag.reserve(k);

  // Upper block triangle once, mirrored bit-exactly.
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      Eigen::MatrixXd block = lagged_subjects[a].data.transpose() * lagged_subjects[b].data;
      if (a == b) {
        // Force exact symmetry of the diagonal block (upper triangle wins).
        block.triangularView<Eigen::StrictlyLower>() =
            block.triangularView<Eigen::StrictlyUpper>().transpose();
        corr.r_blockdiag.push_back(block);
      }
      corr.r_full.block(a * m, b * m, m, m) = block;
      if (a != b) corr.r_full.block(b * m, a * m, m, m) = block.transpose();
    }
  }

  if (lagged_stimulus.has_value()) {
    const auto& y = lagged_stimulus->data;
    if (y.rows() != t_len) throw std::invalid_argument("stimulus differs in sample count");
    corr.r_ky.reserve(k);
    for (int a = 0; a < k; ++a) {
      corr.r_ky.push_back(lagged_subjects[a].data.transpose() * y);
    }
    Eigen::MatrixXd ryy = y.transpose() * y;
    ryy.triangularView<Eigen::StrictlyLower>() =
        ryy.triangularView<Eigen::StrictlyUpper>().transpose();
    corr.r_yy = ryy;
  }
  return corr;
}

namespace {

Eigen::VectorXd stimulus_feature_row(const Eigen::MatrixXd& stim_trial, int row) {
  if (row < 0 || row >= stim_trial.rows()) {
    throw std::invalid_argument("stimulus feature row out of range");
  }
  return stim_trial.row(row).transpose();
}

}  // namespace

std::vector<LaggedTrial> lag_trials(const Recording& rec, std::span<const int> trials,
                                    const LagSpec& eeg_lags, int stimulus_row) {
  std::vector<LaggedTrial> out;
  out.reserve(trials.size());
  for (int t : trials) {
    if (t < 0 || t >= rec.trial_count()) throw std::invalid_argument("trial index out of range");
    LaggedTrial lt;
    lt.subjects.reserve(rec.subjects.size());
    for (const auto& subj : rec.subjects) {
      lt.subjects.push_back(build_lag_matrix(subj[static_cast<std::size_t>(t)], eeg_lags).data);
    }
    if (rec.has_stimulus()) {
      lt.stimulus = stimulus_feature_row(rec.stimulus[static_cast<std::size_t>(t)], stimulus_row);
    }
    out.push_back(std::move(lt));
  }
  return out;
}

LaggedConcat lag_and_concat(const Recording& rec, std::span<const int> trials,
                            const LagSpec& eeg_lags, const std::optional<LagSpec>& stimulus_lags,
                            int stimulus_row) {
  if (trials.empty()) throw std::invalid_argument("no trials selected");
  const int k = rec.subject_count();
  std::int64_t total = 0;
  for (int t : trials) {
    if (t < 0 || t >= rec.trial_count()) throw std::invalid_argument("trial index out of range");
    total += rec.subjects[0][static_cast<std::size_t>(t)].cols();
  }

  LaggedConcat out;
  out.subjects.reserve(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) {
    LagMatrix cat;
    cat.spec = eeg_lags;
    cat.channels = rec.channel_count();
    cat.data.resize(total, static_cast<Eigen::Index>(rec.channel_count()) * eeg_lags.count());
    Eigen::Index row = 0;
    for (int t : trials) {
      const auto& trial = rec.subjects[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
      LagMatrix lm = build_lag_matrix(trial, eeg_lags);
      cat.data.middleRows(row, lm.data.rows()) = lm.data;
      row += lm.data.rows();
    }
    out.subjects.push_back(std::move(cat));
  }

  if (stimulus_lags.has_value()) {
    if (!rec.has_stimulus()) throw std::invalid_argument("recording has no stimulus");
    LagMatrix cat;
    cat.spec = *stimulus_lags;
    cat.channels = 1;
    cat.data.resize(total, stimulus_lags->count());
    Eigen::Index row = 0;
    for (int t : trials) {
      const Eigen::VectorXd y =
          stimulus_feature_row(rec.stimulus[static_cast<std::size_t>(t)], stimulus_row);
      LagMatrix lm = build_lag_matrix(y.transpose(), *stimulus_lags);
      cat.data.middleRows(row, lm.data.rows()) = lm.data;
      row += lm.data.rows();
    }
    out.stimulus = std::move(cat);
  }
  return out;
}

Recording subset_recording(const Recording& rec, std::span<const int> subject_idx,
                           std::span<const int> channel_idx) {
  Recording out;
  out.sample_rate = rec.sample_rate;
  out.stimulus = rec.stimulus;
  out.subjects.reserve(subject_idx.size());
  for (int s : subject_idx) {
    if (s < 0 || s >= rec.subject_count()) throw std::invalid_argument("subject index out of range");
    std::vector<Eigen::MatrixXd> trials;
    trials.reserve(rec.subjects[static_cast<std::size_t>(s)].size());
    for (const auto& trial : rec.subjects[static_cast<std::size_t>(s)]) {
      Eigen::MatrixXd sub(channel_idx.size(), trial.cols());
      for (std::size_t c = 0; c < channel_idx.size(); ++c) {
        if (channel_idx[c] < 0 || channel_idx[c] >= trial.rows()) {
          throw std::invalid_argument("channel index out of range");
        }
        sub.row(static_cast<Eigen::Index>(c)) = trial.row(channel_idx[c]);
      }
      trials.push_back(std::move(sub));
    }
    out.subjects.push_back(std::move(trials));
  }
  return out;
}

}  // namespace gccakit
