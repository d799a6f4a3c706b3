#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gccakit/datamodel.hpp"
#include "gccakit/estimators.hpp"
#include "gccakit/metrics.hpp"

namespace gccakit {

/// Empirical null distribution of a correlation metric under trial
/// permutation, with its (1 - level) quantile as significance threshold.
struct NullDistribution {
  std::vector<double> samples;
  std::string metric;
  double level = 0.05;
  double threshold = 0.0;
};

enum class MetricKind { Isc, Sc, ScAvg };

/// component selects the ISC component, or the subject for Sc (-1 pools all
/// subjects by rotating through them deterministically).
struct MetricSpec {
  MetricKind kind = MetricKind::Isc;
  int component = 0;
  double level = 0.05;

  std::string name() const;
};

/// One Monte-Carlo run's fitted state: the model, its held-out trials, and
/// the stimulus decoders trained alongside it (needed for Sc / ScAvg).
struct RunContext {
  GroupModel model;
  std::vector<LaggedTrial> test_trials;
  StimulusDecoders decoders;
};

/// Builds the null distribution from n_perms_per_run trial permutations of
/// every run's test set. ISC permutes the trial order independently per
/// subject; SC permutes stimulus trials against the (projected) recordings.
/// Within-trial sample order is never touched. Each permutation contributes
/// one window-level metric value, with the evaluated window (and pooled
/// subject) rotating deterministically across permutations. Deterministic
/// per seed, keyed by (run, permutation) index.
NullDistribution permutation_threshold(const std::vector<RunContext>& runs,
                                       const MetricSpec& spec, int n_perms_per_run,
                                       int window_samples, std::uint64_t seed, int threads = 1);

/// One run's slice of the null distribution: the n_perms samples keyed by
/// (run_index, permutation) exactly as permutation_threshold would draw
/// them; concatenating the slices of all runs reproduces its sample vector.
/// Lets long sweeps stream runs instead of keeping them all alive.
std::vector<double> permutation_samples(const RunContext& run, const MetricSpec& spec,
                                        int run_index, int n_perms, int window_samples,
                                        std::uint64_t seed, int threads = 1);

/// Fraction of values strictly above the threshold.
double exceedance_rate(const std::vector<double>& values, double threshold);

}  // namespace gccakit
