// Acceptance suite: one line per criterion, nonzero exit if any fails.
// An optional integer argument runs a single criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gccakit/harness.hpp"
#include "gccakit/linalg.hpp"
#include "gccakit/matrix_io.hpp"
#include "gccakit/metrics.hpp"
#include "gccakit/rng.hpp"
#include "gccakit/runner.hpp"
#include "gccakit/stats.hpp"
#include "oracle_helpers.hpp"

using namespace gccakit;

namespace {

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Criterion {
  int id;
  std::string description;
  double budget_s;
  bool (*run)(std::string& detail);
};

// --- helpers ---------------------------------------------------------------

LagMatrix wrap(const Eigen::MatrixXd& data) {
  LagMatrix lm;
  lm.data = data;
  lm.spec = {0, 0};
  lm.channels = static_cast<int>(data.cols());
  return lm;
}

CorrelationSet corr_of(const std::vector<Eigen::MatrixXd>& views,
                       const Eigen::MatrixXd* stimulus = nullptr) {
  std::vector<LagMatrix> lagged;
  for (const auto& v : views) lagged.push_back(wrap(v));
  std::optional<LagMatrix> stim;
  if (stimulus != nullptr) stim = wrap(*stimulus);
  return compute_correlations(lagged, stim);
}

std::vector<Eigen::MatrixXd> correlated_views(Rng& rng, int k, int t, int m,
                                              double strength = 1.0) {
  const Eigen::MatrixXd shared = oracle::random_matrix(rng, t, 1);
  std::vector<Eigen::MatrixXd> views;
  for (int i = 0; i < k; ++i) {
    Eigen::MatrixXd v = oracle::random_matrix(rng, t, m);
    v += strength * shared * oracle::random_matrix(rng, 1, m);
    views.push_back(std::move(v));
  }
  return views;
}

// --- criterion 1: generalized eigensolver against the dense oracle ---------

bool c1_gevd(std::string& detail) {
  Rng rng(10001);
  double worst_value = 0.0;
  double worst_residual = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 5 + static_cast<int>(rng.below(196));  // 5..200
    const Eigen::MatrixXd a = oracle::random_symmetric(rng, n);
    const Eigen::MatrixXd b = oracle::random_spd(rng, n);
    const linalg::GevdResult res = linalg::sym_gevd_smallest({a, b}, n);
    const Eigen::VectorXd expected = oracle::dense_pencil_eigenvalues(a, b);
    for (int i = 0; i < n; ++i) {
      const double err =
          std::abs(res.eigenvalues[i] - expected[i]) / std::max(1.0, std::abs(expected[i]));
      worst_value = std::max(worst_value, err);
      const Eigen::VectorXd v = res.eigenvectors.col(i);
      const double residual = (a * v - res.eigenvalues[i] * (b * v)).norm() / v.norm();
      worst_residual = std::max(worst_residual, residual);
    }
  }
  detail = "max eigenvalue error " + std::to_string(worst_value) + ", max residual " +
           std::to_string(worst_residual);
  return worst_value <= 1e-8 && worst_residual <= 1e-8;
}

// --- criterion 2: two-subject fits match an SVD-based CCA ------------------

bool c2_cca(std::string& detail) {
  Rng rng(10002);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto views = correlated_views(rng, 2, 500, 8, 0.7);
    const Eigen::VectorXd rho = oracle::svd_cca_correlations(views[0], views[1]);
    const GroupModel model = gcca_fit(corr_of(views), 0.0, 4);
    for (int i = 0; i < 4; ++i) {
      worst = std::max(worst, std::abs(model.eigenvalues[i] - 1.0 / (1.0 + rho[i])));
    }
  }
  detail = "max |eigenvalue - 1/(1+rho)| = " + std::to_string(worst);
  return worst <= 1e-6;
}

// --- criterion 3: eigenvalue of a component shared by P subjects is 1/P ----

bool c3_sharing_law(std::string& detail) {
  Rng rng(10003);
  const int k = 5;
  const int m = 4;
  const int t = 400;
  // Orthonormal latent pool: three shared components living in 5 / 3 / 2
  // subjects plus private fillers, mixed per subject by a random basis.
  const int n_latents = 3 + 1 + 1 + 2 + 3 + 3;
  const Eigen::MatrixXd pool = oracle::random_orthonormal(rng, t, n_latents);
  const Eigen::VectorXd shared5 = pool.col(0);
  const Eigen::VectorXd shared3 = pool.col(1);
  const Eigen::VectorXd shared2 = pool.col(2);
  int next_private = 3;

  std::vector<Eigen::MatrixXd> views;
  for (int subj = 0; subj < k; ++subj) {
    std::vector<Eigen::VectorXd> cols;
    cols.push_back(shared5);
    if (subj < 3) cols.push_back(shared3);
    if (subj < 2) cols.push_back(shared2);
    while (static_cast<int>(cols.size()) < m) cols.push_back(pool.col(next_private++));
    Eigen::MatrixXd x(t, m);
    for (int c = 0; c < m; ++c) x.col(c) = cols[static_cast<std::size_t>(c)];
    // Random invertible mixing must not change the spectrum.
    Eigen::MatrixXd mix = oracle::random_matrix(rng, m, m);
    mix.diagonal().array() += 3.0;
    views.push_back(x * mix);
  }

  const GroupModel model = gcca_fit(corr_of(views), 0.0, 4);
  const std::vector<double> expected{1.0 / 5.0, 1.0 / 3.0, 1.0 / 2.0, 1.0};
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    worst = std::max(worst, std::abs(model.eigenvalues[i] - expected[static_cast<std::size_t>(i)]));
  }
  detail = "max |eigenvalue - 1/P| = " + std::to_string(worst);
  return worst <= 1e-3;
}

// --- criterion 4: subspace orthonormality and stationarity ------------------

bool c4_constraints(std::string& detail) {
  Rng rng(10004);
  const int t = 500;
  const int k = 3;
  const int m = 5;
  const int q = 3;
  const auto views = correlated_views(rng, k, t, m);
  const Eigen::MatrixXd stim = oracle::random_matrix(rng, t, 3);
  const CorrelationSet corr = corr_of(views, &stim);
  const double mu = 0.35;
  const double gamma = 1.2;

  double worst_gram = 0.0;
  auto check = [&](const GroupModel& model) {
    const Eigen::MatrixXd s =
        shared_subspace(model, views, model.encoder.has_value() ? &stim : nullptr);
    const Eigen::MatrixXd gram = s.transpose() * s;
    worst_gram = std::max(worst_gram,
                          (gram - Eigen::MatrixXd::Identity(q, q)).cwiseAbs().maxCoeff());
  };
  check(gcca_fit(corr, mu, q));
  check(corrca_fit(corr, mu, q));
  const GroupModel si = sigcca_fit(corr, mu, gamma, q);
  check(si);
  check(sicorrca_fit(corr, mu, gamma, q));

  // Stationarity of the stimulus-informed solution.
  const Eigen::MatrixXd s = shared_subspace(si, views, &stim);
  double worst_kkt = 0.0;
  for (int i = 0; i < k; ++i) {
    const Eigen::MatrixXd lhs = views[static_cast<std::size_t>(i)].transpose() * s;
    const Eigen::MatrixXd rhs =
        (corr.r_blockdiag[static_cast<std::size_t>(i)] + mu * Eigen::MatrixXd::Identity(m, m)) *
        si.decoders[static_cast<std::size_t>(i)];
    worst_kkt = std::max(worst_kkt, (lhs - rhs).norm() / lhs.norm());
  }
  const Eigen::MatrixXd lhs_v = gamma * stim.transpose() * s;
  const Eigen::MatrixXd rhs_v =
      (gamma * corr.r_yy + mu * Eigen::MatrixXd::Identity(3, 3)) * *si.encoder;
  worst_kkt = std::max(worst_kkt, (lhs_v - rhs_v).norm() / lhs_v.norm());

  detail = "max |S'S - I| = " + std::to_string(worst_gram) + ", max stationarity residual = " +
           std::to_string(worst_kkt);
  return worst_gram <= 1e-6 && worst_kkt <= 1e-6;
}

// --- criterion 5: gamma = 0 reductions and pencil dimensions ---------------

bool c5_reductions(std::string& detail) {
  Rng rng(10005);
  const auto views = correlated_views(rng, 3, 300, 4);
  const Eigen::MatrixXd stim = oracle::random_matrix(rng, 300, 2);
  const CorrelationSet corr = corr_of(views, &stim);

  const GroupModel si_g = sigcca_fit(corr, 0.4, 0.0, 2);
  const GroupModel g = gcca_fit(corr, 0.4, 2);
  bool ok = si_g.eigenvalues == g.eigenvalues;
  for (int i = 0; i < 3; ++i) {
    ok = ok && si_g.decoders[static_cast<std::size_t>(i)] == g.decoders[static_cast<std::size_t>(i)];
  }
  ok = ok && si_g.encoder.has_value() && si_g.encoder->cwiseAbs().maxCoeff() == 0.0;

  const GroupModel si_c = sicorrca_fit(corr, 0.4, 0.0, 2);
  const GroupModel c = corrca_fit(corr, 0.4, 2);
  ok = ok && si_c.eigenvalues == c.eigenvalues && si_c.decoders[0] == c.decoders[0];

  // Pencil dimensions: corrca caps q at M; sicorrca at M + P.
  bool dims_ok = true;
  try {
    corrca_fit(corr, 0.4, 5);
    dims_ok = false;
  } catch (const std::invalid_argument&) {
  }
  try {
    sicorrca_fit(corr, 0.4, 1.0, 7);
    dims_ok = false;
  } catch (const std::invalid_argument&) {
  }
  const GroupModel full_c = sicorrca_fit(corr, 0.4, 1.0, 6);  // q = M + P is feasible
  dims_ok = dims_ok && full_c.component_count() == 6;

  detail = std::string("dispatch ") + (ok ? "exact" : "mismatch") + ", dimensions " +
           (dims_ok ? "as stated" : "wrong");
  return ok && dims_ok;
}

// --- criterion 6: objective value identity ----------------------------------

bool c6_objective(std::string& detail) {
  Rng rng(10006);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const int t = 400;
    const int k = 3;
    const int m = 4;
    const int q = 2;
    const auto views = correlated_views(rng, k, t, m);
    const Eigen::MatrixXd stim = oracle::random_matrix(rng, t, 2);
    const CorrelationSet corr = corr_of(views, &stim);
    const double mu = 0.1 + 0.2 * rng.uniform();
    const double gamma = 0.5 + 2.0 * rng.uniform();
    const GroupModel model = sigcca_fit(corr, mu, gamma, q);
    const Eigen::MatrixXd s = shared_subspace(model, views, &stim);

    double objective = 0.0;
    for (int i = 0; i < k; ++i) {
      objective +=
          (s - views[static_cast<std::size_t>(i)] * model.decoders[static_cast<std::size_t>(i)])
              .squaredNorm() +
          mu * model.decoders[static_cast<std::size_t>(i)].squaredNorm();
    }
    objective += gamma * (s - stim * *model.encoder).squaredNorm();
    objective += mu * model.encoder->squaredNorm();
    const double expected = (k + gamma) * q - model.eigenvalues.cwiseInverse().sum();
    worst = std::max(worst, std::abs(objective - expected) / std::abs(expected));
  }
  detail = "max relative objective error = " + std::to_string(worst);
  return worst <= 1e-5;
}

// --- criteria 7 and 8: directional replication on synthetic recordings -----

struct DirectionalResults {
  // grid value -> method -> per-run mean metric across windows
  std::map<double, std::map<std::string, std::vector<double>>> isc;
  std::map<double, std::map<std::string, std::vector<double>>> sc_avg;
  std::vector<double> grid;
  int n_runs = 0;
  bool ready = false;
};

DirectionalResults& directional() {
  static DirectionalResults results;
  if (results.ready) return results;

  SynthSpec spec;
  spec.subjects = 10;
  spec.channels = 16;
  spec.n_trials = 56;
  spec.trial_length = 60;  // 30 s trials of the 2 Hz feature
  spec.sample_rate = 2.0;
  spec.n_shared = 2;
  spec.subjects_per_component = {10, 10};
  spec.component_power = {1.0, 1.0};  // the stimulus breaks the tie
  spec.fir_length = 4;
  spec.fir_seed = 5;
  spec.snr_db = -15.0;
  spec.max_delay = 1;
  spec.seed = 20240;
  const Recording rec = generate_synthetic(spec);

  SweepConfig cfg;
  cfg.variable = SweepVariable::TrainingMinutes;
  cfg.grid = {2.0, 5.0, 20.0};
  cfg.n_runs = 50;
  // The stimulus-informed fit reuses the validated stimulus-unaware mu.
  cfg.methods = {parse_method("gcca_noreg", true), parse_method("gcca", true),
                 parse_method("sigcca", false)};
  cfg.mu_grid = {3e-2, 1e-1, 3e-1};
  cfg.gamma_grid = {0.25, 1.0, 4.0, 16.0};  // gamma = 0 reductions are criterion 5
  cfg.q = 1;
  cfg.window_samples = 60;
  cfg.eeg_lags = {-1, 1};
  cfg.stimulus_taps = 6;
  cfg.decoder_lags = 3;
  cfg.perms_per_run = 20;
  cfg.seed = 424242;
  const SweepResult sweep = run_sweep(rec, cfg);

  // Aggregate window rows into per-run means.
  std::map<std::tuple<double, std::string, int>, std::pair<double, int>> isc_acc;
  std::map<std::tuple<double, std::string, int>, std::pair<double, int>> sc_acc;
  for (const auto& row : sweep.rows) {
    const auto key = std::make_tuple(row.grid_value, row.method, row.run);
    if (row.metric == "isc" && row.index == 0) {
      isc_acc[key].first += row.value;
      isc_acc[key].second += 1;
    } else if (row.metric == "sc_avg") {
      sc_acc[key].first += row.value;
      sc_acc[key].second += 1;
    }
  }
  for (const auto& [key, acc] : isc_acc) {
    results.isc[std::get<0>(key)][std::get<1>(key)].push_back(acc.first / acc.second);
  }
  for (const auto& [key, acc] : sc_acc) {
    results.sc_avg[std::get<0>(key)][std::get<1>(key)].push_back(acc.first / acc.second);
  }
  results.grid = cfg.grid;
  results.n_runs = cfg.n_runs;
  results.ready = true;
  return results;
}

double mean_vec(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double win_fraction(const std::vector<double>& a, const std::vector<double>& b) {
  int wins = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] > b[i]) ++wins;
  }
  return a.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(a.size());
}

bool c7_low_data(std::string& detail) {
  DirectionalResults& r = directional();
  char buf[256];
  bool ok = true;
  std::string parts;
  for (double minutes : {2.0, 5.0}) {
    const double frac = win_fraction(r.isc[minutes]["sigcca"], r.isc[minutes]["gcca"]);
    std::snprintf(buf, sizeof(buf), "win(%gmin)=%.2f ", minutes, frac);
    parts += buf;
    ok = ok && frac >= 0.80;
  }
  for (double minutes : r.grid) {
    const double noreg = mean_vec(r.isc[minutes]["gcca_noreg"]);
    const double reg = mean_vec(r.isc[minutes]["gcca"]);
    const double si = mean_vec(r.isc[minutes]["sigcca"]);
    std::snprintf(buf, sizeof(buf), "[%gmin noReg=%.4f reg=%.4f si=%.4f] ", minutes, noreg, reg,
                  si);
    parts += buf;
    ok = ok && noreg < reg && noreg < si;
  }
  detail = parts;
  return ok;
}

bool c8_steering(std::string& detail) {
  DirectionalResults& r = directional();
  const double minutes = 20.0;
  const double frac = win_fraction(r.sc_avg[minutes]["sigcca"], r.sc_avg[minutes]["gcca"]);
  const double isc_gap =
      std::abs(mean_vec(r.isc[minutes]["sigcca"]) - mean_vec(r.isc[minutes]["gcca"]));
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "sc_avg win fraction=%.2f, |mean isc gap|=%.4f (sc si=%.3f gcca=%.3f)", frac,
                isc_gap, mean_vec(r.sc_avg[minutes]["sigcca"]),
                mean_vec(r.sc_avg[minutes]["gcca"]));
  detail = buf;
  return frac >= 0.80 && isc_gap <= 0.02;
}

// --- criterion 9: permutation calibration on pure noise --------------------

bool c9_calibration(std::string& detail) {
  std::vector<double> thresholds;
  std::string parts;
  bool ok = true;
  for (int k : {2, 5, 10}) {
    SynthSpec spec;
    spec.subjects = k;
    spec.channels = 8;
    spec.n_trials = 34;
    spec.trial_length = 160;
    spec.sample_rate = 16.0;
    spec.n_shared = 0;
    spec.seed = 90000 + static_cast<std::uint64_t>(k);
    const Recording rec = generate_synthetic(spec);

    std::vector<RunContext> runs;
    std::vector<double> observed;
    for (int r = 0; r < 50; ++r) {
      const TrialSplit split =
          split_trials(spec.n_trials, 6, 0.25,
                       mix_seed(777, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(r)));
      const LaggedConcat cat = lag_and_concat(rec, split.train, {0, 0}, std::nullopt);
      const CorrelationSet corr = compute_correlations(cat.subjects, std::nullopt);
      RunContext ctx;
      ctx.model = gcca_fit(corr, 1e-3, 1);
      ctx.test_trials = lag_trials(rec, split.test, {0, 0});
      const MetricsReport rep =
          windowed_eval(ctx.model, ctx.test_trials, spec.trial_length, StimulusDecoders{});
      for (const auto& row : rep.per_window) observed.push_back(row.isc[0]);
      runs.push_back(std::move(ctx));
    }
    const NullDistribution null =
        permutation_threshold(runs, {MetricKind::Isc, 0, 0.05}, 20, spec.trial_length,
                              31337 + static_cast<std::uint64_t>(k));
    const double rate = exceedance_rate(observed, null.threshold);
    thresholds.push_back(null.threshold);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "[K=%d thr=%.4f rate=%.3f n=%zu] ", k, null.threshold, rate,
                  observed.size());
    parts += buf;
    ok = ok && observed.size() >= 1000 && rate >= 0.02 && rate <= 0.08;
  }
  int inversions = 0;
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (thresholds[i] > thresholds[i - 1]) ++inversions;
  }
  ok = ok && inversions <= 1;
  detail = parts + "inversions=" + std::to_string(inversions);
  return ok;
}

// --- criterion 10: reference time-lag layout --------------------------------

bool c10_hankel(std::string& detail) {
  Eigen::MatrixXd x(1, 5);
  x << 1, 2, 3, 4, 5;
  const LagMatrix lm = build_lag_matrix(x, {-2, 2});
  Eigen::MatrixXd expected(5, 5);
  expected << 0, 0, 1, 2, 3,
              0, 1, 2, 3, 4,
              1, 2, 3, 4, 5,
              2, 3, 4, 5, 0,
              3, 4, 5, 0, 0;
  const bool ok = lm.data == expected;
  detail = ok ? "entry-for-entry match" : "layout mismatch";
  return ok;
}

// --- criterion 11: end-to-end determinism ------------------------------------

bool c11_determinism(std::string& detail) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "gccakit_acceptance_e2e";
  fs::remove_all(base);
  fs::create_directories(base);

  const std::string config =
      "synth.subjects = 4\n"
      "synth.channels = 5\n"
      "synth.trials = 14\n"
      "synth.trial_length = 64\n"
      "synth.sample_rate = 16\n"
      "synth.shared_components = 1\n"
      "synth.snr_db = -5\n"
      "synth.seed = 11\n"
      "methods = gcca,sigcca\n"
      "q = 2\n"
      "lags.eeg_min = 0\n"
      "lags.eeg_max = 0\n"
      "lags.stimulus = 3\n"
      "lags.decoder = 2\n"
      "mu_grid = 1e-3,1e-1\n"
      "gamma_grid = 0,1,8\n"
      "window_seconds = 4\n"
      "train_minutes = 0.533333333333\n"
      "sweep.variable = training_minutes\n"
      "sweep.grid = 0.533333333333\n"
      "sweep.runs = 3\n"
      "perm.evaluate_count = 120\n";
  const fs::path cfg_synth = base / "synth.cfg";
  std::ofstream(cfg_synth) << config;

  auto pipeline = [&](const fs::path& out) {
    cli::run({"synth", cfg_synth, out / "data", std::nullopt, 1});
    const fs::path cfg_files = out / "files.cfg";
    {
      std::ofstream f(cfg_files);
      f << "data.dir = " << (out / "data").string() << "\n";
      f << config.substr(config.find("methods ="));
    }
    cli::run({"sweep", cfg_files, out / "sweep", std::nullopt, 1});
    cli::run({"evaluate", cfg_files, out / "eval", std::nullopt, 1});
  };
  pipeline(base / "a");
  pipeline(base / "b");

  const bool sweep_same = io::read_text(base / "a" / "sweep" / "sweep.csv") ==
                          io::read_text(base / "b" / "sweep" / "sweep.csv");
  const bool eval_same = io::read_text(base / "a" / "eval" / "metrics.csv") ==
                         io::read_text(base / "b" / "eval" / "metrics.csv");
  fs::remove_all(base);
  detail = std::string("sweep csv ") + (sweep_same ? "identical" : "differs") + ", metrics csv " +
           (eval_same ? "identical" : "differs");
  return sweep_same && eval_same;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "generalized eigensolver matches the dense oracle (100 pencils, N <= 200)", 60, c1_gevd},
      {2, "two-subject eigenvalues equal 1/(1+rho) against an SVD-CCA oracle", 10, c2_cca},
      {3, "component shared by P of 5 subjects has eigenvalue 1/P", 10, c3_sharing_law},
      {4, "S'S = I and stationarity residuals on all four estimators", 30, c4_constraints},
      {5, "gamma = 0 reductions are exact; pencil dimensions as stated", 5, c5_reductions},
      {6, "objective equals (K+gamma)Q - sum(1/sigma)", 10, c6_objective},
      {7, "low-data replication: stimulus-informed beats regularized, unregularized worst", 900,
       c7_low_data},
      {8, "steering: higher stimulus correlation at matched inter-subject correlation", 300,
       c8_steering},
      {9, "permutation threshold calibrated on noise and non-increasing in group size", 600,
       c9_calibration},
      {10, "time-lag embedding reproduces the reference layout", 1, c10_hankel},
      {11, "synth -> sweep -> evaluate reruns are byte-identical", 300, c11_determinism},
  };

  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (const auto& criterion : criteria) {
    if (only != 0 && criterion.id != only) continue;
    const double start = now_s();
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed = now_s() - start;
    if (elapsed > criterion.budget_s) {
      ok = false;
      detail += " [over budget " + std::to_string(criterion.budget_s) + " s]";
    }
    std::printf("[%s] criterion %2d: %s (%.1f s) %s\n", ok ? "PASS" : "FAIL", criterion.id,
                criterion.description.c_str(), elapsed, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
