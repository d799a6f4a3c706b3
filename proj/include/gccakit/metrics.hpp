#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gccakit/datamodel.hpp"
#include "gccakit/estimators.hpp"

namespace gccakit {

/// Correlation value with a degeneracy flag instead of NaN: when either
/// signal has (numerically) zero norm the value is 0 and degenerate is set.
struct Correlation {
  double value = 0.0;
  bool degenerate = false;
};

/// Pearson correlation of two equal-length vectors. Inputs are taken as
/// already centered; evaluation code re-centers per window before calling.
Correlation pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Inter-subject correlation of one component: the average pairwise Pearson
/// correlation of the per-subject projections. Signals are re-centered over
/// the given span (the evaluation window). When degenerate is non-null it is
/// set if any pairwise correlation was degenerate.
double isc(const ProjectedSignals& projected, int component, bool* degenerate = nullptr);

/// Least-squares stimulus reconstruction weights on causally lagged
/// projected components (lags 0..n_lags-1). scope_subject is the subject the
/// decoder belongs to, or -1 for the average-subspace decoder.
struct StimulusDecoder {
  Eigen::VectorXd weights;  // Q * L_d
  LagSpec lags;
  int scope_subject = -1;
};

/// Solves the normal equations for the reconstruction weights with a
/// factorization-based solve; a tiny ridge is added only on singularity.
/// Requires more samples than weights.
StimulusDecoder fit_stimulus_decoder(const Eigen::MatrixXd& projected_train,
                                     const Eigen::VectorXd& stimulus_train, int n_lags,
                                     int scope_subject = -1);

/// Stimulus correlation: Pearson correlation between the stimulus feature
/// and its reconstruction from the lagged projected components. Both sides
/// are re-centered over the given span.
Correlation stimulus_correlation(const StimulusDecoder& decoder,
                                 const Eigen::MatrixXd& projected_test,
                                 const Eigen::VectorXd& stimulus_test);

/// Per-subject decoders plus the average-subspace decoder, all trained on
/// the same training trials as the group model.
struct StimulusDecoders {
  std::vector<StimulusDecoder> per_subject;
  std::optional<StimulusDecoder> average;
};

StimulusDecoders train_stimulus_decoders(const GroupModel& model,
                                         const std::vector<LaggedTrial>& train_trials, int n_lags);

struct WindowMetrics {
  int trial = 0;
  int window = 0;               // index within the trial
  Eigen::VectorXd isc;          // per component
  Eigen::VectorXd sc;           // per subject (size 0 when no decoders given)
  double sc_avg = 0.0;
  bool has_sc = false;
  bool degenerate = false;      // any constituent correlation was degenerate
};

struct MetricsReport {
  std::vector<WindowMetrics> per_window;
  int window_samples = 0;

  /// Mean across windows of component q's ISC.
  double mean_isc(int component) const;
  double mean_sc_avg() const;
};

/// Evaluates ISC (per component) and SC / SC_avg (when decoders are given)
/// over consecutive non-overlapping windows. Windows never straddle trial
/// boundaries; leftover samples at a trial's end are dropped. Throws when no
/// window fits.
MetricsReport windowed_eval(const GroupModel& model, const std::vector<LaggedTrial>& test_trials,
                            int window_samples, const StimulusDecoders& decoders);

}  // namespace gccakit
