#include "gccakit/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gccakit/errors.hpp"
#include "gccakit/linalg.hpp"

namespace gccakit {

std::string method_name(Method m) {
  switch (m) {
    case Method::Gcca: return "gcca";
    case Method::CorrCa: return "corrca";
    case Method::SiGcca: return "sigcca";
    case Method::SiCorrCa: return "sicorrca";
  }
  return "unknown";
}

bool method_uses_stimulus(Method m) { return m == Method::SiGcca || m == Method::SiCorrCa; }

bool method_shares_decoder(Method m) { return m == Method::CorrCa || m == Method::SiCorrCa; }

namespace {

// Pencil assembly. Left = blockdiagonal correlations (+ mu I), right = the
// full correlation structure; stimulus blocks enter weighted by gamma.

Eigen::MatrixXd gcca_left(const CorrelationSet& corr, double mu) {
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k * m, k * m);
  for (int i = 0; i < k; ++i) a.block(i * m, i * m, m, m) = corr.r_blockdiag[i];
  a.diagonal().array() += mu;
  return a;
}

Eigen::MatrixXd corrca_left(const CorrelationSet& corr, double mu) {
  const int m = corr.block_dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (const auto& block : corr.r_blockdiag) a += block;
  a.diagonal().array() += mu;
  return a;
}

Eigen::MatrixXd corrca_right(const CorrelationSet& corr) {
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) b += corr.r_full.block(i * m, j * m, m, m);
  }
  b.triangularView<Eigen::StrictlyLower>() = b.triangularView<Eigen::StrictlyUpper>().transpose();
  return b;
}

Eigen::MatrixXd sigcca_left(const CorrelationSet& corr, double mu, double gamma) {
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  const int p = corr.stimulus_dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k * m + p, k * m + p);
  for (int i = 0; i < k; ++i) a.block(i * m, i * m, m, m) = corr.r_blockdiag[i];
  a.block(k * m, k * m, p, p) = gamma * corr.r_yy;
  a.diagonal().array() += mu;
  return a;
}

Eigen::MatrixXd sigcca_right(const CorrelationSet& corr, double gamma) {
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  const int p = corr.stimulus_dim();
  Eigen::MatrixXd b(k * m + p, k * m + p);
  b.topLeftCorner(k * m, k * m) = corr.r_full;
  for (int i = 0; i < k; ++i) {
    b.block(i * m, k * m, m, p) = gamma * corr.r_ky[i];
    b.block(k * m, i * m, p, m) = b.block(i * m, k * m, m, p).transpose();
  }
  b.bottomRightCorner(p, p) = gamma * gamma * corr.r_yy;
  return b;
}

Eigen::MatrixXd sicorrca_left(const CorrelationSet& corr, double mu, double gamma) {
  const int m = corr.block_dim();
  const int p = corr.stimulus_dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + p, m + p);
  for (const auto& block : corr.r_blockdiag) a.topLeftCorner(m, m) += block;
  a.bottomRightCorner(p, p) = gamma * corr.r_yy;
  a.diagonal().array() += mu;
  return a;
}

Eigen::MatrixXd sicorrca_right(const CorrelationSet& corr, double gamma) {
  const int m = corr.block_dim();
  const int p = corr.stimulus_dim();
  Eigen::MatrixXd b(m + p, m + p);
  b.topLeftCorner(m, m) = corrca_right(corr);
  Eigen::MatrixXd ky_sum = Eigen::MatrixXd::Zero(m, p);
  for (const auto& blk : corr.r_ky) ky_sum += blk;
  b.topRightCorner(m, p) = gamma * ky_sum;
  b.bottomLeftCorner(p, m) = b.topRightCorner(m, p).transpose();
  b.bottomRightCorner(p, p) = gamma * gamma * corr.r_yy;
  return b;
}

Eigen::MatrixXd right_pencil(Method method, const CorrelationSet& corr, double gamma) {
  switch (method) {
    case Method::Gcca: return corr.r_full;
    case Method::CorrCa: return corrca_right(corr);
    case Method::SiGcca: return sigcca_right(corr, gamma);
    case Method::SiCorrCa: return sicorrca_right(corr, gamma);
  }
  throw std::logic_error("unreachable");
}

// Scales stacked eigenvector columns so every training shared-subspace
// column has unit norm: |s_q| = sigma_q * sqrt(w_q' B w_q). A column whose
// B-mass vanishes marks a component beyond the numerical rank of B.
void scale_columns(Eigen::MatrixXd& stacked, const Eigen::VectorXd& eigenvalues,
                   const Eigen::MatrixXd& b) {
  for (int j = 0; j < stacked.cols(); ++j) {
    const double bmass = stacked.col(j).dot(b * stacked.col(j));
    const double snorm = eigenvalues[j] * std::sqrt(std::max(bmass, 0.0));
    if (!(snorm > 1e-14) || !std::isfinite(snorm)) {
      throw NumericError("component " + std::to_string(j) +
                         " has a degenerate shared-subspace norm; it exceeds the numerical rank "
                         "of the correlation matrix");
    }
    stacked.col(j) /= snorm;
  }
}

// Splits the stacked pencil-space solution into per-subject decoder blocks
// of m rows each (replicated when the decoder is shared) plus an optional
// trailing p-row encoder block.
GroupModel assemble_model(Method method, const Eigen::MatrixXd& stacked,
                          const Eigen::VectorXd& eigenvalues, const Hyperparams& hyper, int k,
                          int m, int p) {
  GroupModel model;
  model.method = method;
  model.hyper = hyper;
  model.eigenvalues = eigenvalues;
  model.decoders.reserve(static_cast<std::size_t>(k));
  if (method_shares_decoder(method)) {
    const Eigen::MatrixXd w = stacked.topRows(m);
    for (int i = 0; i < k; ++i) model.decoders.push_back(w);
  } else {
    for (int i = 0; i < k; ++i) model.decoders.push_back(stacked.middleRows(i * m, m));
  }
  if (method_uses_stimulus(method)) model.encoder = stacked.bottomRows(p);
  return model;
}

void check_common(const CorrelationSet& corr, int q, int pencil_dim, const char* what) {
  if (corr.subject_count() == 0) throw std::invalid_argument("correlation set is empty");
  if (q < 1 || q > pencil_dim) {
    throw std::invalid_argument(std::string(what) + ": component count q=" + std::to_string(q) +
                                " outside [1, " + std::to_string(pencil_dim) + "]");
  }
}

}  // namespace

GroupModel gcca_fit(const CorrelationSet& corr, double mu, int q) {
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  if (k < 2) throw std::invalid_argument("gcca_fit needs at least 2 subjects");
  check_common(corr, q, k * m, "gcca_fit");

  const Eigen::MatrixXd b = corr.r_full;
  auto gevd = linalg::sym_gevd_smallest({gcca_left(corr, mu), b}, q);
  Eigen::MatrixXd stacked = gevd.eigenvectors;
  scale_columns(stacked, gevd.eigenvalues, b);
  return assemble_model(Method::Gcca, stacked, gevd.eigenvalues, {mu, 0.0, q}, k, m, 0);
}

GroupModel corrca_fit(const CorrelationSet& corr, double mu, int q) {
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  check_common(corr, q, m, "corrca_fit");

  const Eigen::MatrixXd b = corrca_right(corr);
  auto gevd = linalg::sym_gevd_smallest({corrca_left(corr, mu), b}, q);
  Eigen::MatrixXd stacked = gevd.eigenvectors;
  scale_columns(stacked, gevd.eigenvalues, b);
  return assemble_model(Method::CorrCa, stacked, gevd.eigenvalues, {mu, 0.0, q}, k, m, 0);
}

GroupModel sigcca_fit(const CorrelationSet& corr, double mu, double gamma, int q) {
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  if (!corr.has_stimulus()) throw std::invalid_argument("sigcca_fit needs stimulus blocks");
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  const int p = corr.stimulus_dim();

  if (gamma == 0.0) {
    // The right pencil matrix loses definiteness at gamma = 0; the problem
    // degenerates exactly to the stimulus-unaware fit with a zero encoder.
    GroupModel model = gcca_fit(corr, mu, q);
    model.method = Method::SiGcca;
    model.hyper.gamma = 0.0;
    model.encoder = Eigen::MatrixXd::Zero(p, q);
    return model;
  }

  check_common(corr, q, k * m + p, "sigcca_fit");
  const Eigen::MatrixXd b = sigcca_right(corr, gamma);
  auto gevd = linalg::sym_gevd_smallest({sigcca_left(corr, mu, gamma), b}, q);
  Eigen::MatrixXd stacked = gevd.eigenvectors;
  scale_columns(stacked, gevd.eigenvalues, b);
  return assemble_model(Method::SiGcca, stacked, gevd.eigenvalues, {mu, gamma, q}, k, m, p);
}

GroupModel sicorrca_fit(const CorrelationSet& corr, double mu, double gamma, int q) {
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  if (!corr.has_stimulus()) throw std::invalid_argument("sicorrca_fit needs stimulus blocks");
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  const int p = corr.stimulus_dim();

  if (gamma == 0.0) {
    GroupModel model = corrca_fit(corr, mu, q);
    model.method = Method::SiCorrCa;
    model.hyper.gamma = 0.0;
    model.encoder = Eigen::MatrixXd::Zero(p, q);
    return model;
  }

  check_common(corr, q, m + p, "sicorrca_fit");
  const Eigen::MatrixXd b = sicorrca_right(corr, gamma);
  auto gevd = linalg::sym_gevd_smallest({sicorrca_left(corr, mu, gamma), b}, q);
  Eigen::MatrixXd stacked = gevd.eigenvectors;
  scale_columns(stacked, gevd.eigenvalues, b);
  return assemble_model(Method::SiCorrCa, stacked, gevd.eigenvalues, {mu, gamma, q}, k, m, p);
}

GroupModel fit(Method method, const CorrelationSet& corr, const Hyperparams& hyper) {
  switch (method) {
    case Method::Gcca: return gcca_fit(corr, hyper.mu, hyper.q);
    case Method::CorrCa: return corrca_fit(corr, hyper.mu, hyper.q);
    case Method::SiGcca: return sigcca_fit(corr, hyper.mu, hyper.gamma, hyper.q);
    case Method::SiCorrCa: return sicorrca_fit(corr, hyper.mu, hyper.gamma, hyper.q);
  }
  throw std::logic_error("unreachable");
}

GroupModel scale_model(const GroupModel& model, const CorrelationSet& corr) {
  const int k = corr.subject_count();
  const int m = corr.block_dim();
  const int p = model.encoder.has_value() ? static_cast<int>(model.encoder->rows()) : 0;
  const int q = model.component_count();
  if (model.subject_count() != k || model.column_dim() != m) {
    throw std::invalid_argument("model does not match the correlation set");
  }

  const bool shared = method_shares_decoder(model.method);
  const int rows = (shared ? m : k * m) + p;
  Eigen::MatrixXd stacked(rows, q);
  if (shared) {
    stacked.topRows(m) = model.decoders[0];
  } else {
    for (int i = 0; i < k; ++i) stacked.middleRows(i * m, m) = model.decoders[i];
  }
  if (p > 0) stacked.bottomRows(p) = *model.encoder;

  // gamma = 0 stimulus-informed models live on the reduced pencil.
  const bool reduced = method_uses_stimulus(model.method) && model.hyper.gamma == 0.0;
  Eigen::MatrixXd b;
  Eigen::MatrixXd active = stacked;
  if (reduced) {
    active = stacked.topRows(rows - p);
    b = right_pencil(shared ? Method::CorrCa : Method::Gcca, corr, 0.0);
  } else {
    b = right_pencil(model.method, corr, model.hyper.gamma);
  }
  scale_columns(active, model.eigenvalues, b);
  stacked.topRows(active.rows()) = active;
  if (reduced && p > 0) stacked.bottomRows(p).setZero();

  return assemble_model(model.method, stacked, model.eigenvalues, model.hyper, k, m, p);
}

ProjectedSignals project(const GroupModel& model,
                         const std::vector<Eigen::MatrixXd>& lagged_subjects) {
  const int k = model.subject_count();
  if (static_cast<int>(lagged_subjects.size()) != k) {
    throw std::invalid_argument("subject count does not match the model");
  }
  ProjectedSignals out;
  out.per_subject.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    if (lagged_subjects[static_cast<std::size_t>(i)].cols() != model.column_dim()) {
      throw std::invalid_argument("lagged data column count does not match the model");
    }
    out.per_subject.push_back(lagged_subjects[static_cast<std::size_t>(i)] * model.decoders[static_cast<std::size_t>(i)]);
  }
  out.shared_average = out.per_subject[0];
  for (int i = 1; i < k; ++i) out.shared_average += out.per_subject[static_cast<std::size_t>(i)];
  out.shared_average /= static_cast<double>(k);
  return out;
}

Eigen::MatrixXd shared_subspace(const GroupModel& model,
                                const std::vector<Eigen::MatrixXd>& lagged_subjects,
                                const Eigen::MatrixXd* lagged_stimulus) {
  const int k = model.subject_count();
  if (static_cast<int>(lagged_subjects.size()) != k) {
    throw std::invalid_argument("subject count does not match the model");
  }
  Eigen::MatrixXd sum = lagged_subjects[0] * model.decoders[0];
  for (int i = 1; i < k; ++i) {
    sum += lagged_subjects[static_cast<std::size_t>(i)] * model.decoders[static_cast<std::size_t>(i)];
  }
  if (model.encoder.has_value() && model.hyper.gamma > 0.0) {
    if (lagged_stimulus == nullptr) {
      throw std::invalid_argument("stimulus-informed shared subspace needs the lagged stimulus");
    }
    sum += model.hyper.gamma * (*lagged_stimulus * *model.encoder);
  }
  return sum * model.eigenvalues.asDiagonal();
}

}  // namespace gccakit
