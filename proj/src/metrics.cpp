#include "gccakit/metrics.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gccakit/errors.hpp"

namespace gccakit {

namespace {

constexpr double kNormFloor = 1e-15;

Eigen::VectorXd centered(const Eigen::VectorXd& v) {
  return v.array() - v.mean();
}

// Causal lag expansion of a T x Q component matrix: T x (Q * L_d).
Eigen::MatrixXd lag_components(const Eigen::MatrixXd& z, const LagSpec& lags) {
  return build_lag_matrix(z.transpose(), lags).data;
}

// Normal-equation solve with a tiny ridge only on singularity.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& regressors,
                                       const Eigen::VectorXd& target) {
  Eigen::MatrixXd gram = regressors.transpose() * regressors;
  gram.triangularView<Eigen::StrictlyLower>() =
      gram.triangularView<Eigen::StrictlyUpper>().transpose();
  const Eigen::VectorXd rhs = regressors.transpose() * target;

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd w = llt.solve(rhs);
    if (w.allFinite()) return w;
  }
  gram.diagonal().array() += 1e-10 * gram.trace() / static_cast<double>(gram.rows());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("stimulus decoder normal equations are singular beyond the ridge fallback");
  }
  Eigen::VectorXd w = ldlt.solve(rhs);
  if (!w.allFinite()) {
    throw NumericError("stimulus decoder solve produced non-finite weights");
  }
  return w;
}

}  // namespace

Correlation pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 samples");
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx < kNormFloor || ny < kNormFloor) return {0.0, true};
  const double rho = x.dot(y) / (nx * ny);
  return {std::clamp(rho, -1.0, 1.0), false};
}

double isc(const ProjectedSignals& projected, int component, bool* degenerate) {
  const int k = static_cast<int>(projected.per_subject.size());
  if (k < 2) throw std::invalid_argument("isc needs at least 2 subjects");
  std::vector<Eigen::VectorXd> z;
  z.reserve(static_cast<std::size_t>(k));
  for (const auto& subj : projected.per_subject) z.push_back(centered(subj.col(component)));

  double sum = 0.0;
  for (int a = 0; a < k - 1; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const Correlation c =
          pearson(z[static_cast<std::size_t>(a)], z[static_cast<std::size_t>(b)]);
      sum += c.value;
      if (degenerate != nullptr && c.degenerate) *degenerate = true;
    }
  }
  return 2.0 * sum / (static_cast<double>(k) * static_cast<double>(k - 1));
}

StimulusDecoder fit_stimulus_decoder(const Eigen::MatrixXd& projected_train,
                                     const Eigen::VectorXd& stimulus_train, int n_lags,
                                     int scope_subject) {
  if (n_lags < 1) throw std::invalid_argument("decoder needs at least one lag");
  if (projected_train.rows() != stimulus_train.size()) {
    throw std::invalid_argument("projected data and stimulus differ in length");
  }
  const auto n_weights = projected_train.cols() * n_lags;
  if (projected_train.rows() <= n_weights) {
    throw std::invalid_argument("stimulus decoder needs more samples than weights (" +
                                std::to_string(projected_train.rows()) + " <= " +
                                std::to_string(n_weights) + ")");
  }

  StimulusDecoder dec;
  dec.lags = causal_window(n_lags);
  dec.scope_subject = scope_subject;
  dec.weights = solve_normal_equations(lag_components(projected_train, dec.lags), stimulus_train);
  return dec;
}

Correlation stimulus_correlation(const StimulusDecoder& decoder,
                                 const Eigen::MatrixXd& projected_test,
                                 const Eigen::VectorXd& stimulus_test) {
  if (projected_test.rows() != stimulus_test.size()) {
    throw std::invalid_argument("projected data and stimulus differ in length");
  }
  if (projected_test.cols() * decoder.lags.count() != decoder.weights.size()) {
    throw std::invalid_argument("projected component count does not match the decoder");
  }
  const Eigen::VectorXd predicted = lag_components(projected_test, decoder.lags) * decoder.weights;
  return pearson(centered(stimulus_test), centered(predicted));
}

StimulusDecoders train_stimulus_decoders(const GroupModel& model,
                                         const std::vector<LaggedTrial>& train_trials,
                                         int n_lags) {
  if (train_trials.empty()) throw std::invalid_argument("no training trials given");
  const int k = model.subject_count();
  const int q = model.component_count();

  std::int64_t total = 0;
  for (const auto& trial : train_trials) {
    if (trial.stimulus.size() == 0) {
      throw std::invalid_argument("stimulus decoders need a stimulus feature per trial");
    }
    total += trial.stimulus.size();
  }

  // Lag per trial, then stack, so decoder padding never crosses trials.
  const LagSpec lags = causal_window(n_lags);
  std::vector<Eigen::MatrixXd> lagged_per_subject(
      static_cast<std::size_t>(k), Eigen::MatrixXd(total, static_cast<Eigen::Index>(q) * n_lags));
  Eigen::MatrixXd lagged_avg(total, static_cast<Eigen::Index>(q) * n_lags);
  Eigen::VectorXd y(total);

  Eigen::Index row = 0;
  for (const auto& trial : train_trials) {
    const ProjectedSignals proj = project(model, trial.subjects);
    const auto len = trial.stimulus.size();
    for (int i = 0; i < k; ++i) {
      lagged_per_subject[static_cast<std::size_t>(i)].middleRows(row, len) =
          lag_components(proj.per_subject[static_cast<std::size_t>(i)], lags);
    }
    lagged_avg.middleRows(row, len) = lag_components(proj.shared_average, lags);
    y.segment(row, len) = trial.stimulus;
    row += len;
  }

  StimulusDecoders out;
  out.per_subject.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    StimulusDecoder dec;
    dec.lags = lags;
    dec.scope_subject = i;
    dec.weights = solve_normal_equations(lagged_per_subject[static_cast<std::size_t>(i)], y);
    out.per_subject.push_back(std::move(dec));
  }
  StimulusDecoder avg;
  avg.lags = lags;
  avg.scope_subject = -1;
  avg.weights = solve_normal_equations(lagged_avg, y);
  out.average = std::move(avg);
  return out;
}

double MetricsReport::mean_isc(int component) const {
  double sum = 0.0;
  for (const auto& w : per_window) sum += w.isc[component];
  return per_window.empty() ? 0.0 : sum / static_cast<double>(per_window.size());
}

double MetricsReport::mean_sc_avg() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& w : per_window) {
    if (w.has_sc) {
      sum += w.sc_avg;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

MetricsReport windowed_eval(const GroupModel& model, const std::vector<LaggedTrial>& test_trials,
                            int window_samples, const StimulusDecoders& decoders) {
  if (test_trials.empty()) throw std::invalid_argument("empty test set");
  if (window_samples < 2) throw std::invalid_argument("window must span at least 2 samples");
  const int k = model.subject_count();
  const int q = model.component_count();
  const bool with_sc = !decoders.per_subject.empty();
  if (with_sc && static_cast<int>(decoders.per_subject.size()) != k) {
    throw std::invalid_argument("need one stimulus decoder per subject");
  }

  MetricsReport report;
  report.window_samples = window_samples;

  for (std::size_t t = 0; t < test_trials.size(); ++t) {
    const auto& trial = test_trials[t];
    const auto t_len = trial.subjects.at(0).rows();
    const int n_windows = static_cast<int>(t_len / window_samples);
    if (n_windows == 0) continue;

    const ProjectedSignals proj = project(model, trial.subjects);

    // Reconstructions over the whole trial; windows slice them afterwards.
    std::vector<Eigen::VectorXd> predicted(static_cast<std::size_t>(k));
    Eigen::VectorXd predicted_avg;
    if (with_sc) {
      if (trial.stimulus.size() != t_len) {
        throw std::invalid_argument("test trial lacks an aligned stimulus feature");
      }
      for (int i = 0; i < k; ++i) {
        const auto& dec = decoders.per_subject[static_cast<std::size_t>(i)];
        predicted[static_cast<std::size_t>(i)] =
            lag_components(proj.per_subject[static_cast<std::size_t>(i)], dec.lags) * dec.weights;
      }
      if (decoders.average.has_value()) {
        predicted_avg =
            lag_components(proj.shared_average, decoders.average->lags) * decoders.average->weights;
      }
    }

    for (int w = 0; w < n_windows; ++w) {
      const Eigen::Index start = static_cast<Eigen::Index>(w) * window_samples;
      WindowMetrics row;
      row.trial = static_cast<int>(t);
      row.window = w;
      row.isc.resize(q);
      row.has_sc = with_sc;

      ProjectedSignals win;
      win.per_subject.reserve(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        win.per_subject.push_back(
            proj.per_subject[static_cast<std::size_t>(i)].middleRows(start, window_samples));
      }
      win.shared_average = proj.shared_average.middleRows(start, window_samples);
      for (int comp = 0; comp < q; ++comp) row.isc[comp] = isc(win, comp, &row.degenerate);

      if (with_sc) {
        const Eigen::VectorXd y = centered(trial.stimulus.segment(start, window_samples));
        row.sc.resize(k);
        for (int i = 0; i < k; ++i) {
          const Correlation c = pearson(
              y, centered(predicted[static_cast<std::size_t>(i)].segment(start, window_samples)));
          row.sc[i] = c.value;
          row.degenerate |= c.degenerate;
        }
        if (decoders.average.has_value()) {
          const Correlation c = pearson(y, centered(predicted_avg.segment(start, window_samples)));
          row.sc_avg = c.value;
          row.degenerate |= c.degenerate;
        }
      }
      report.per_window.push_back(std::move(row));
    }
  }

  if (report.per_window.empty()) {
    throw std::invalid_argument("window length exceeds every test trial");
  }
  return report;
}

}  // namespace gccakit
