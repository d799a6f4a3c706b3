#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "gccakit/errors.hpp"
#include "gccakit/linalg.hpp"
#include "gccakit/rng.hpp"
#include "oracle_helpers.hpp"

using gccakit::NumericError;
using gccakit::Rng;
using namespace gccakit::linalg;

TEST_CASE("identity pencil has unit eigenvalues") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  const GevdResult r = sym_gevd_smallest({eye, eye}, 3);
  for (int i = 0; i < 3; ++i) CHECK(r.eigenvalues[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("diagonal pencil picks the smallest entry") {
  Eigen::MatrixXd a = Eigen::Vector3d(3.0, 1.0, 2.0).asDiagonal();
  const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(3, 3);
  const GevdResult r = sym_gevd_smallest({a, b}, 1);
  CHECK(r.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.eigenvectors(1, 0)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.eigenvectors(1, 0) > 0.0);  // canonical sign
}

TEST_CASE("random pencil matches the dense oracle") {
  Rng rng(42);
  const int n = 50;
  const Eigen::MatrixXd a = oracle::random_symmetric(rng, n);
  const Eigen::MatrixXd b = oracle::random_spd(rng, n);
  const GevdResult r = sym_gevd_smallest({a, b}, n);
  const Eigen::VectorXd expected = oracle::dense_pencil_eigenvalues(a, b);
  for (int i = 0; i < n; ++i) CHECK(r.eigenvalues[i] == doctest::Approx(expected[i]).epsilon(1e-8));
}

TEST_CASE("eigenpair residuals and b-orthogonality") {
  Rng rng(7);
  const int n = 40;
  const Eigen::MatrixXd a = oracle::random_symmetric(rng, n);
  const Eigen::MatrixXd b = oracle::random_spd(rng, n);
  const int q = 10;
  const GevdResult r = sym_gevd_smallest({a, b}, q);
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd v = r.eigenvectors.col(j);
    const double residual = (a * v - r.eigenvalues[j] * (b * v)).norm() / v.norm();
    CHECK(residual <= 1e-8);
  }
  const Eigen::MatrixXd vbv = r.eigenvectors.transpose() * b * r.eigenvectors;
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) {
      if (i == j) {
        CHECK(vbv(i, j) == doctest::Approx(1.0).epsilon(1e-8));
      } else {
        CHECK(std::abs(vbv(i, j)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("eigenvalues invariant under common positive scaling") {
  Rng rng(3);
  const int n = 20;
  const Eigen::MatrixXd a = oracle::random_symmetric(rng, n);
  const Eigen::MatrixXd b = oracle::random_spd(rng, n);
  const GevdResult r1 = sym_gevd_smallest({a, b}, 5);
  const GevdResult r2 = sym_gevd_smallest({3.7 * a, 3.7 * b}, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(r1.eigenvalues[i] == doctest::Approx(r2.eigenvalues[i]).epsilon(1e-10));
  }
}

TEST_CASE("repeated calls are bit-identical") {
  Rng rng(11);
  const Eigen::MatrixXd a = oracle::random_symmetric(rng, 15);
  const Eigen::MatrixXd b = oracle::random_spd(rng, 15);
  const GevdResult r1 = sym_gevd_smallest({a, b}, 6);
  const GevdResult r2 = sym_gevd_smallest({a, b}, 6);
  CHECK(r1.eigenvalues == r2.eigenvalues);
  CHECK(r1.eigenvectors == r2.eigenvectors);
}

TEST_CASE("semidefinite b succeeds through jitter") {
  Rng rng(5);
  // Rank-deficient b: outer product of a thin matrix.
  const Eigen::MatrixXd thin = oracle::random_matrix(rng, 4, 8);
  Eigen::MatrixXd b = thin.transpose() * thin;
  b = 0.5 * (b + b.transpose());
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(8, 8);
  const GevdResult r = sym_gevd_smallest({a, b}, 2);
  CHECK(r.eigenvalues.allFinite());
}

TEST_CASE("indefinite b is rejected") {
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(3, 3);
  b(2, 2) = -1.0;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(sym_gevd_smallest({a, b}, 1), NumericError);
}

TEST_CASE("input validation") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(sym_gevd_smallest({eye, eye}, 4), std::invalid_argument);
  CHECK_THROWS_AS(sym_gevd_smallest({eye, eye}, 0), std::invalid_argument);
  Eigen::MatrixXd asym = eye;
  asym(0, 1) = 0.5;  // not mirrored
  CHECK_THROWS_AS(sym_gevd_smallest({asym, eye}, 1), std::invalid_argument);
}

TEST_CASE("shrinkage: spherical sample covariance needs no shrinking") {
  // Orthogonal columns with equal norms: sample covariance is exactly
  // sigma^2 I, so target and sample coincide and mu is irrelevant. The
  // shrunk estimator equals the sample covariance for any intensity.
  Rng rng(19);
  const int t = 32;
  const int m = 4;
  Eigen::MatrixXd x = 2.0 * oracle::random_orthonormal(rng, t, m);
  const ShrinkageEstimate est = ledoit_wolf_intensity(x);
  const Eigen::MatrixXd s = x.transpose() * x / static_cast<double>(t);
  const double nu = s.trace() / m;
  const Eigen::MatrixXd shrunk =
      est.intensity * nu * Eigen::MatrixXd::Identity(m, m) + (1.0 - est.intensity) * s;
  CHECK((shrunk - s).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("shrinkage intensity stays in [0, 1]") {
  Rng rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd x = oracle::random_matrix(rng, 12, 6);
    const ShrinkageEstimate est = ledoit_wolf_intensity(x);
    CHECK(est.intensity >= 0.0);
    CHECK(est.intensity <= 1.0);
    CHECK(est.mu >= 0.0);
  }
}

TEST_CASE("shrinkage intensity decreases with sample count") {
  // Fixed full-rank covariance; more data means less shrinking.
  Rng rng(31);
  const int m = 8;
  const Eigen::MatrixXd mixing = oracle::random_matrix(rng, m, m);
  auto draw = [&](int t) {
    Eigen::MatrixXd x = oracle::random_matrix(rng, t, m) * mixing.transpose();
    x.rowwise() -= x.colwise().mean();
    return x;
  };
  const double i50 = ledoit_wolf_intensity(draw(50)).intensity;
  const double i500 = ledoit_wolf_intensity(draw(500)).intensity;
  const double i5000 = ledoit_wolf_intensity(draw(5000)).intensity;
  CHECK(i50 > i500);
  CHECK(i500 > i5000);
}

TEST_CASE("shrinkage input validation") {
  Eigen::MatrixXd one_row(1, 3);
  one_row.setZero();
  CHECK_THROWS_AS(ledoit_wolf_intensity(one_row), std::invalid_argument);
  Eigen::MatrixXd bad(4, 2);
  bad.setZero();
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ledoit_wolf_intensity(bad), std::invalid_argument);
}

TEST_CASE("gram-based shrinkage matches the data-matrix path") {
  Rng rng(37);
  const Eigen::MatrixXd x = oracle::random_matrix(rng, 64, 5);
  const ShrinkageEstimate a = ledoit_wolf_intensity(x);
  const Eigen::MatrixXd gram = x.transpose() * x;
  const double quartic = x.rowwise().squaredNorm().array().square().sum();
  const ShrinkageEstimate b = ledoit_wolf_from_gram(gram, quartic, x.rows());
  CHECK(a.intensity == doctest::Approx(b.intensity).epsilon(1e-14));
  CHECK(a.mu == doctest::Approx(b.mu).epsilon(1e-14));
}
