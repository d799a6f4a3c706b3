#include "gccakit/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "gccakit/errors.hpp"

namespace gccakit::linalg {

namespace {

// Relative max-norm symmetry check.
void require_symmetric(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(name) + " is not square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double dev = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (dev > 1e-12 * scale) {
    throw std::invalid_argument(std::string(name) + " is not symmetric (max deviation " +
                                std::to_string(dev) + ")");
  }
}

// Canonical sign: largest-magnitude entry positive. First index wins ties.
void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v[idx] < 0.0) v = -v;
}

// A factorization that "succeeds" on a numerically singular matrix would
// poison the reduction, so near-zero pivots count as failure too.
bool well_conditioned(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  const double dmax = diag.maxCoeff();
  const double dmin = diag.minCoeff();
  return dmin > 0.0 && dmin > 1e-8 * dmax;
}

// C = L^-1 M L^-T for a Cholesky factor L, symmetrized.
Eigen::MatrixXd reduce(const Eigen::MatrixXd& m, const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd c = l.triangularView<Eigen::Lower>().solve(m);
  c = l.triangularView<Eigen::Lower>().solve(c.transpose()).eval();
  return 0.5 * (c + c.transpose());
}

Eigen::MatrixXd back_transform(const Eigen::MatrixXd& vectors,
                               const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::MatrixXd l = llt.matrixL();
  return l.transpose().triangularView<Eigen::Upper>().solve(vectors);
}

// Direct route: factor b, solve for the q smallest eigenvalues of
// L^-1 a L^-T. Valid whenever b is numerically definite.
GevdResult solve_via_b(const Eigen::MatrixXd& a, const Eigen::LLT<Eigen::MatrixXd>& llt_b, int q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduce(a, llt_b));
  if (eig.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolver failed to converge");
  }
  GevdResult result;
  result.eigenvalues = eig.eigenvalues().head(q);
  result.eigenvectors = back_transform(eig.eigenvectors().leftCols(q), llt_b);
  for (int j = 0; j < q; ++j) {
    auto col = result.eigenvectors.col(j);
    const double bnorm = (llt_b.matrixU() * col).norm();
    if (!(bnorm > 0.0) || !std::isfinite(bnorm)) {
      throw NumericError("degenerate eigenvector with zero b-norm at index " + std::to_string(j));
    }
    col /= bnorm;
    canonicalize_sign(col);
  }
  return result;
}

// Reversed route for rank-deficient b: the q smallest eigenvalues of (a, b)
// are the reciprocals of the q largest eigenvalues of (b, a), computed with
// a factorization of the definite side. Directions in the null space of b
// carry a huge sentinel eigenvalue and keep unit a-norm; they only surface
// when q exceeds the numerical rank of b, where the caller fails loudly.
// Rounding noise in the ill-conditioned reduction can surface as slightly
// negative values; definiteness of b is checked by the caller beforehand,
// so negatives here are clamped rather than rejected.
GevdResult solve_via_a(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                       const Eigen::LLT<Eigen::MatrixXd>& llt_a, int q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduce(b, llt_a));
  if (eig.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolver failed to converge");
  }
  const Eigen::Index n = a.rows();
  const Eigen::VectorXd theta = eig.eigenvalues();  // ascending
  const double theta_max = std::max(theta.maxCoeff(), 0.0);
  const double cutoff = 1e-14 * std::max(theta_max, 1.0);

  GevdResult result;
  result.eigenvalues.resize(q);
  result.eigenvectors.resize(n, q);
  for (int j = 0; j < q; ++j) {
    const Eigen::Index src = n - 1 - j;  // largest theta first = smallest lambda
    const double th = theta[src];
    Eigen::VectorXd v = back_transform(eig.eigenvectors().col(src), llt_a);
    if (th > cutoff) {
      result.eigenvalues[j] = 1.0 / th;
      v /= std::sqrt(v.dot(b * v));  // unit b-norm
    } else {
      result.eigenvalues[j] = 1.0 / cutoff;
    }
    canonicalize_sign(v);
    result.eigenvectors.col(j) = v;
  }
  return result;
}

}  // namespace

GevdResult sym_gevd_smallest(const SymPencil& pencil, int q) {
  const Eigen::Index n = pencil.a.rows();
  require_symmetric(pencil.a, "pencil.a");
  require_symmetric(pencil.b, "pencil.b");
  if (pencil.b.rows() != n) {
    throw std::invalid_argument("pencil matrices differ in size");
  }
  if (q < 1 || q > n) {
    throw std::invalid_argument("requested eigenpair count q=" + std::to_string(q) +
                                " outside [1, " + std::to_string(n) + "]");
  }

  // Work on exactly symmetric copies so the reduction sees one triangle.
  const Eigen::MatrixXd a_sym = 0.5 * (pencil.a + pencil.a.transpose());
  const Eigen::MatrixXd b_sym = 0.5 * (pencil.b + pencil.b.transpose());

  {
    Eigen::LLT<Eigen::MatrixXd> llt_b(b_sym);
    if (well_conditioned(llt_b)) return solve_via_b(a_sym, llt_b, q);
  }

  // b is numerically singular or indefinite. Indefiniteness violates the
  // pencil contract; check it directly on b before the fallback route.
  {
    Eigen::LDLT<Eigen::MatrixXd> ldlt_b(b_sym);
    const Eigen::VectorXd d = ldlt_b.vectorD();
    if (d.minCoeff() < -1e-8 * std::max(1.0, d.maxCoeff())) {
      throw NumericError("right-hand pencil matrix is numerically indefinite");
    }
  }

  // Factor the left-hand side instead, with escalating jitter if the
  // loading alone is not definite.
  Eigen::MatrixXd a_eff = a_sym;
  const double trace_over_n = std::abs(a_eff.trace()) / static_cast<double>(n);
  Eigen::LLT<Eigen::MatrixXd> llt_a(a_eff);
  if (!well_conditioned(llt_a)) {
    bool ok = false;
    for (double eps = 1e-12; eps <= 1e-6; eps *= 100.0) {
      a_eff.diagonal().array() += eps * std::max(trace_over_n, 1e-300);
      llt_a.compute(a_eff);
      if (well_conditioned(llt_a)) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw NumericError("pencil is numerically indefinite after jitter");
    }
  }
  return solve_via_a(a_eff, b_sym, llt_a, q);
}

ShrinkageEstimate ledoit_wolf_intensity(const Eigen::MatrixXd& x) {
  const auto t = x.rows();
  if (t < 2) {
    throw std::invalid_argument("Ledoit-Wolf estimate needs at least 2 samples");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("Ledoit-Wolf input contains non-finite values");
  }
  const Eigen::MatrixXd gram = x.transpose() * x;
  const double quartic = x.rowwise().squaredNorm().array().square().sum();
  return ledoit_wolf_from_gram(gram, quartic, t);
}

ShrinkageEstimate ledoit_wolf_from_gram(const Eigen::MatrixXd& gram, double quartic_sum,
                                        std::int64_t t_samples) {
  const auto m = gram.rows();
  if (m == 0 || t_samples < 2) {
    throw std::invalid_argument("Ledoit-Wolf estimate needs at least 2 samples and 1 column");
  }
  const double t = static_cast<double>(t_samples);

  // Sample covariance S = gram / T, target nu*I with nu = trace(S)/M.
  const Eigen::MatrixXd s = gram / t;
  const double nu = s.trace() / static_cast<double>(m);
  Eigen::MatrixXd centered = s;
  centered.diagonal().array() -= nu;
  const double d2 = centered.squaredNorm();

  // sum_t |x_t x_t' - S|_F^2 = sum_t |x_t|^4 - T |S|_F^2.
  const double b2_raw = (quartic_sum / t - s.squaredNorm()) / t;
  const double b2 = std::min(std::max(b2_raw, 0.0), d2);

  ShrinkageEstimate est;
  est.intensity = d2 > 0.0 ? b2 / d2 : 0.0;

  // mu reproduces (1-rho) S + rho nu I as S + mu/T I up to global scale; the
  // ratio is capped so intensity -> 1 stays finite.
  constexpr double kMaxRatio = 1e12;
  const double ratio =
      est.intensity >= 1.0 ? kMaxRatio : std::min(est.intensity / (1.0 - est.intensity), kMaxRatio);
  est.mu = ratio * gram.trace() / static_cast<double>(m);
  return est;
}

}  // namespace gccakit::linalg
