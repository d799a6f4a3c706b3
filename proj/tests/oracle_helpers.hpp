// Test-only reference implementations, independent of the library's solve
// paths: a dense general eigensolver oracle for symmetric pencils, an
// SVD-based two-view CCA, and naive correlation accumulation.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <vector>

#include "gccakit/rng.hpp"

namespace oracle {

inline Eigen::MatrixXd random_matrix(gccakit::Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = rng.gaussian();
  }
  return m;
}

inline Eigen::MatrixXd random_symmetric(gccakit::Rng& rng, int n) {
  const Eigen::MatrixXd m = random_matrix(rng, n, n);
  return 0.5 * (m + m.transpose());
}

inline Eigen::MatrixXd random_spd(gccakit::Rng& rng, int n, double ridge = 1.0) {
  const Eigen::MatrixXd m = random_matrix(rng, n, n);
  Eigen::MatrixXd spd = m.transpose() * m;
  spd.diagonal().array() += ridge;
  return 0.5 * (spd + spd.transpose());
}

/// Orthonormal columns via Householder QR of a random matrix.
inline Eigen::MatrixXd random_orthonormal(gccakit::Rng& rng, int rows, int cols) {
  const Eigen::MatrixXd m = random_matrix(rng, rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  return q;
}

/// All eigenvalues of the pencil (a, b) from the dense non-symmetric solve
/// of b^-1 a, sorted ascending. Independent of the Cholesky reduction path.
inline Eigen::VectorXd dense_pencil_eigenvalues(const Eigen::MatrixXd& a,
                                                const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd c = b.fullPivLu().solve(a);
  Eigen::EigenSolver<Eigen::MatrixXd> eig(c);
  std::vector<double> vals(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) vals[static_cast<std::size_t>(i)] = eig.eigenvalues()[i].real();
  std::sort(vals.begin(), vals.end());
  Eigen::VectorXd out(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) out[i] = vals[static_cast<std::size_t>(i)];
  return out;
}

/// Canonical correlations of two zero-mean views via whitening and SVD.
inline Eigen::VectorXd svd_cca_correlations(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2) {
  auto inv_sqrt = [](const Eigen::MatrixXd& g) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    return Eigen::MatrixXd(eig.eigenvectors() *
                           eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse().asDiagonal() *
                           eig.eigenvectors().transpose());
  };
  const Eigen::MatrixXd r11 = x1.transpose() * x1;
  const Eigen::MatrixXd r22 = x2.transpose() * x2;
  const Eigen::MatrixXd r12 = x1.transpose() * x2;
  const Eigen::MatrixXd coherence = inv_sqrt(r11) * r12 * inv_sqrt(r22);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(coherence);
  return svd.singularValues();
}

/// Entry-by-entry correlation block, the slow way.
inline Eigen::MatrixXd naive_cross_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.cols(), y.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index t = 0; t < x.rows(); ++t) acc += x(t, i) * y(t, j);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace oracle
