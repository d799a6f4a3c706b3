#pragma once

#include <Eigen/Dense>

namespace gccakit::linalg {

/// A symmetric matrix pencil (a, b): b must be positive (semi)definite.
/// Solutions are pairs (lambda, v) with a*v = lambda*b*v.
struct SymPencil {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
};

/// Eigenvalues ascending; eigenvectors hold the matching columns, each with
/// unit b-norm (v' b v = 1) and canonical sign (largest-magnitude entry
/// positive).
struct GevdResult {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

/// Solves the symmetric-definite generalized eigenproblem for the q smallest
/// eigenvalues via Cholesky reduction b = L L', a standard symmetric solve on
/// L^-1 a L^-T, and back-transformation of the eigenvectors.
///
/// If b fails to factor, a diagonal jitter of eps*trace(b)/n is added with
/// eps escalating from 1e-12 to 1e-6 before giving up; a failure after the
/// last escalation signals a numerically indefinite b.
GevdResult sym_gevd_smallest(const SymPencil& pencil, int q);

/// Shrinkage intensity toward the scaled-identity target and the implied
/// diagonal-loading weight for gram matrices x'x:
///   mu = intensity / (1 - intensity) * trace(x'x) / cols.
struct ShrinkageEstimate {
  double intensity = 0.0;  // in [0, 1]
  double mu = 0.0;         // >= 0
};

/// Ledoit-Wolf intensity for a zero-mean data matrix x (rows = samples).
ShrinkageEstimate ledoit_wolf_intensity(const Eigen::MatrixXd& x);

/// Same estimate from precomputed pieces: gram = x'x, quartic_sum =
/// sum over rows t of |x_t|^4, t_samples = number of rows. Lets callers that
/// already hold correlation matrices avoid a second pass over the data.
ShrinkageEstimate ledoit_wolf_from_gram(const Eigen::MatrixXd& gram, double quartic_sum,
                                        std::int64_t t_samples);

}  // namespace gccakit::linalg
