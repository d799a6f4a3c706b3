#include "gccakit/stats.hpp"

#include <stdexcept>

#include "gccakit/rng.hpp"
#include "gccakit/util.hpp"

namespace gccakit {

std::string MetricSpec::name() const {
  switch (kind) {
    case MetricKind::Isc: return "isc_" + std::to_string(component);
    case MetricKind::Sc: return component < 0 ? "sc" : "sc_" + std::to_string(component);
    case MetricKind::ScAvg: return "sc_avg";
  }
  return "unknown";
}

namespace {

Eigen::VectorXd centered(const Eigen::VectorXd& v) { return v.array() - v.mean(); }

// Per-run signals reduced to what the requested metric needs, one entry per
// test trial. Projections and reconstructions are computed once; the
// permutation loop only reindexes trials and slices windows.
struct PreparedRun {
  // Isc: component signal per subject per trial.
  std::vector<std::vector<Eigen::VectorXd>> component;  // [subject][trial]
  // Sc / ScAvg: stimulus reconstruction per (subject|average) per trial.
  std::vector<std::vector<Eigen::VectorXd>> predicted;  // [series][trial]
  std::vector<Eigen::VectorXd> stimulus;                // [trial]
  int n_trials = 0;
  int trial_length = 0;
};

PreparedRun prepare_run(const RunContext& run, const MetricSpec& spec) {
  PreparedRun prep;
  prep.n_trials = static_cast<int>(run.test_trials.size());
  if (prep.n_trials < 2) {
    throw std::invalid_argument("permutation test needs at least 2 test trials");
  }
  prep.trial_length = static_cast<int>(run.test_trials[0].subjects.at(0).rows());
  for (const auto& trial : run.test_trials) {
    if (trial.subjects.at(0).rows() != prep.trial_length) {
      throw std::invalid_argument("permutation test expects equal-length test trials");
    }
  }

  const int k = run.model.subject_count();
  if (spec.kind == MetricKind::Isc) {
    if (spec.component < 0 || spec.component >= run.model.component_count()) {
      throw std::invalid_argument("ISC component out of range");
    }
    prep.component.assign(static_cast<std::size_t>(k), {});
    for (const auto& trial : run.test_trials) {
      const ProjectedSignals proj = project(run.model, trial.subjects);
      for (int i = 0; i < k; ++i) {
        prep.component[static_cast<std::size_t>(i)].push_back(
            proj.per_subject[static_cast<std::size_t>(i)].col(spec.component));
      }
    }
    return prep;
  }

  // Stimulus-side metrics.
  const bool avg = spec.kind == MetricKind::ScAvg;
  if (avg && !run.decoders.average.has_value()) {
    throw std::invalid_argument("ScAvg null needs the average-subspace decoder");
  }
  if (!avg && run.decoders.per_subject.empty()) {
    throw std::invalid_argument("Sc null needs per-subject decoders");
  }
  const int n_series = avg ? 1 : (spec.component >= 0 ? 1 : k);
  prep.predicted.assign(static_cast<std::size_t>(n_series), {});
  for (const auto& trial : run.test_trials) {
    if (trial.stimulus.size() == 0) {
      throw std::invalid_argument("Sc null needs a stimulus feature per trial");
    }
    prep.stimulus.push_back(trial.stimulus);
    const ProjectedSignals proj = project(run.model, trial.subjects);
    auto reconstruct = [](const Eigen::MatrixXd& z, const StimulusDecoder& dec) {
      return Eigen::VectorXd(build_lag_matrix(z.transpose(), dec.lags).data * dec.weights);
    };
    if (avg) {
      prep.predicted[0].push_back(reconstruct(proj.shared_average, *run.decoders.average));
    } else if (spec.component >= 0) {
      const auto& dec = run.decoders.per_subject.at(static_cast<std::size_t>(spec.component));
      prep.predicted[0].push_back(
          reconstruct(proj.per_subject[static_cast<std::size_t>(spec.component)], dec));
    } else {
      for (int i = 0; i < k; ++i) {
        prep.predicted[static_cast<std::size_t>(i)].push_back(
            reconstruct(proj.per_subject[static_cast<std::size_t>(i)],
                        run.decoders.per_subject[static_cast<std::size_t>(i)]));
      }
    }
  }
  return prep;
}

double isc_of_window(const PreparedRun& prep, const std::vector<std::vector<int>>& perm, int slot,
                     Eigen::Index start, int window) {
  const int k = static_cast<int>(prep.component.size());
  std::vector<Eigen::VectorXd> z;
  z.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int trial = perm[static_cast<std::size_t>(i)][static_cast<std::size_t>(slot)];
    z.push_back(centered(
        prep.component[static_cast<std::size_t>(i)][static_cast<std::size_t>(trial)].segment(
            start, window)));
  }
  double sum = 0.0;
  for (int a = 0; a < k - 1; ++a) {
    for (int b = a + 1; b < k; ++b) {
      sum += pearson(z[static_cast<std::size_t>(a)], z[static_cast<std::size_t>(b)]).value;
    }
  }
  return 2.0 * sum / (static_cast<double>(k) * static_cast<double>(k - 1));
}

// Null samples for one prepared run; global_base = run_index * n_perms keys
// the seeds and the deterministic window/series rotation.
void sample_run(const PreparedRun& prep, const MetricSpec& spec, std::int64_t global_base,
                int n_perms, int window_samples, std::uint64_t seed, int threads,
                std::vector<double>& out, std::size_t out_offset) {
  const int windows_per_trial = prep.trial_length / window_samples;
  if (windows_per_trial == 0) {
    throw std::invalid_argument("window length exceeds the test trials");
  }
  const int total_windows = prep.n_trials * windows_per_trial;

  parallel_for(n_perms, threads, [&](std::int64_t p) {
    const std::int64_t idx = global_base + p;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(idx / n_perms),
                     static_cast<std::uint64_t>(idx % n_perms)));
    double value = 0.0;

    if (spec.kind == MetricKind::Isc) {
      const int k = static_cast<int>(prep.component.size());
      std::vector<std::vector<int>> perm;
      perm.reserve(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) perm.push_back(rng.permutation(prep.n_trials));
      const int designated = static_cast<int>(idx % total_windows);
      const int slot = designated / windows_per_trial;
      const Eigen::Index start =
          static_cast<Eigen::Index>(designated % windows_per_trial) * window_samples;
      value = isc_of_window(prep, perm, slot, start, window_samples);
    } else {
      // Stimulus permutation: recordings keep their order, stimulus trials
      // are permuted against them.
      const std::vector<int> perm = rng.permutation(prep.n_trials);
      const int n_series = static_cast<int>(prep.predicted.size());
      const int series = static_cast<int>(idx % n_series);
      const int designated = static_cast<int>((idx / n_series) % total_windows);
      const int slot = designated / windows_per_trial;
      const Eigen::Index start =
          static_cast<Eigen::Index>(designated % windows_per_trial) * window_samples;
      const Eigen::VectorXd y = centered(
          prep.stimulus[static_cast<std::size_t>(perm[static_cast<std::size_t>(slot)])].segment(
              start, window_samples));
      const Eigen::VectorXd yhat = centered(
          prep.predicted[static_cast<std::size_t>(series)][static_cast<std::size_t>(slot)].segment(
              start, window_samples));
      value = pearson(y, yhat).value;
    }
    out[out_offset + static_cast<std::size_t>(p)] = value;
  });
}

}  // namespace

std::vector<double> permutation_samples(const RunContext& run, const MetricSpec& spec,
                                        int run_index, int n_perms, int window_samples,
                                        std::uint64_t seed, int threads) {
  const PreparedRun prep = prepare_run(run, spec);
  std::vector<double> out(static_cast<std::size_t>(n_perms), 0.0);
  sample_run(prep, spec, static_cast<std::int64_t>(run_index) * n_perms, n_perms, window_samples,
             seed, threads, out, 0);
  return out;
}

NullDistribution permutation_threshold(const std::vector<RunContext>& runs, const MetricSpec& spec,
                                       int n_perms_per_run, int window_samples, std::uint64_t seed,
                                       int threads) {
  const int n_runs = static_cast<int>(runs.size());
  if (n_runs < 1) throw std::invalid_argument("permutation test needs at least one run");
  if (static_cast<std::int64_t>(n_runs) * n_perms_per_run < 100) {
    throw std::invalid_argument("need at least 100 resamplings in total");
  }

  NullDistribution null;
  null.metric = spec.name();
  null.level = spec.level;
  null.samples.assign(static_cast<std::size_t>(n_runs) * n_perms_per_run, 0.0);

  for (int r = 0; r < n_runs; ++r) {
    const PreparedRun prep = prepare_run(runs[static_cast<std::size_t>(r)], spec);
    sample_run(prep, spec, static_cast<std::int64_t>(r) * n_perms_per_run, n_perms_per_run,
               window_samples, seed, threads, null.samples,
               static_cast<std::size_t>(r) * n_perms_per_run);
  }

  null.threshold = empirical_quantile(null.samples, 1.0 - spec.level);
  return null;
}

double exceedance_rate(const std::vector<double>& values, double threshold) {
  if (values.empty()) return 0.0;
  std::int64_t count = 0;
  for (double v : values) {
    if (v > threshold) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(values.size());
}

}  // namespace gccakit
