#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gccakit/datamodel.hpp"

namespace gccakit {

enum class Method { Gcca, CorrCa, SiGcca, SiCorrCa };

std::string method_name(Method m);
bool method_uses_stimulus(Method m);
bool method_shares_decoder(Method m);

struct Hyperparams {
  double mu = 0.0;
  double gamma = 0.0;
  int q = 1;
};

/// Fitted group decoder set. corrCA variants store K identical decoder
/// copies; stimulus-informed variants also carry the stimulus encoder.
/// Decoder columns are scaled so that the training shared subspace has
/// orthonormal columns.
struct GroupModel {
  std::vector<Eigen::MatrixXd> decoders;   // K x (M x Q)
  std::optional<Eigen::MatrixXd> encoder;  // P x Q
  Eigen::VectorXd eigenvalues;             // Q, ascending
  Hyperparams hyper;
  Method method = Method::Gcca;

  int subject_count() const { return static_cast<int>(decoders.size()); }
  int column_dim() const { return decoders.empty() ? 0 : static_cast<int>(decoders[0].rows()); }
  int component_count() const { return static_cast<int>(eigenvalues.size()); }
};

/// Per-subject projections and their arithmetic mean across subjects.
struct ProjectedSignals {
  std::vector<Eigen::MatrixXd> per_subject;  // K x (T x Q)
  Eigen::MatrixXd shared_average;            // T x Q
};

/// Group decoders as the q smallest-eigenvalue generalized eigenvectors of
/// the pencil (blkdiag(R_kk) + mu I, R_full), split per subject.
GroupModel gcca_fit(const CorrelationSet& corr, double mu, int q);

/// Shared-decoder variant: pencil (sum_k R_kk + mu I, sum_k sum_l R_kl) of
/// dimension M; the same decoder is replicated across subjects.
GroupModel corrca_fit(const CorrelationSet& corr, double mu, int q);

/// Stimulus-informed fit on the augmented pencil of dimension KM+P with the
/// stimulus blocks weighted by gamma. gamma = 0 reduces exactly to gcca_fit
/// (with a zero encoder).
GroupModel sigcca_fit(const CorrelationSet& corr, double mu, double gamma, int q);

/// Stimulus-informed shared-decoder fit of dimension M+P. gamma = 0 reduces
/// exactly to corrca_fit.
GroupModel sicorrca_fit(const CorrelationSet& corr, double mu, double gamma, int q);

GroupModel fit(Method method, const CorrelationSet& corr, const Hyperparams& hyper);

/// Rescales decoder (and encoder) columns so the training shared subspace
/// satisfies S'S = I, using correlation-matrix algebra only. Idempotent, and
/// invariant to any positive rescaling of the input columns.
GroupModel scale_model(const GroupModel& model, const CorrelationSet& corr);

/// Applies the decoders to lagged data. The stimulus plays no role here:
/// evaluation uses projected recordings only.
ProjectedSignals project(const GroupModel& model, const std::vector<Eigen::MatrixXd>& lagged_subjects);

/// Training-time shared subspace reconstructed from raw lagged data:
/// column q of (sum_k X_k W_k + gamma Y V) scaled by eigenvalue q. On the
/// data the model was fitted to its columns are orthonormal.
Eigen::MatrixXd shared_subspace(const GroupModel& model,
                                const std::vector<Eigen::MatrixXd>& lagged_subjects,
                                const Eigen::MatrixXd* lagged_stimulus = nullptr);

}  // namespace gccakit
