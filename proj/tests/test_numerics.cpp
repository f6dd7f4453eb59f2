#include <doctest.h>

#include <cmath>

#include "test_support.hpp"

using namespace sme;

TEST_CASE("sym_sqrt on identity and diagonals") {
  const SymMatrix id = SymMatrix::identity(3);
  CHECK(inf_norm(sym_sqrt(id).mat() - Matrix::Identity(3, 3)) < 1e-14);

  Vector diag(2);
  diag << 4.0, 9.0;
  const SymMatrix s = SymMatrix::from_diagonal(diag);
  const SymMatrix r = sym_sqrt(s);
  CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(r(0, 1)) < 1e-12);
}

TEST_CASE("sym_sqrt round trips 100 seeded PSD matrices") {
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 9;  // dims up to 10
    const Matrix s = testing::random_psd(d, 1000 + trial);
    const SymMatrix root = sym_sqrt(SymMatrix(s));
    CHECK(inf_norm(root.mat() * root.mat() - s) < 1e-10);
    CHECK(inf_norm(root.mat() - root.mat().transpose()) == 0.0);
  }
}

TEST_CASE("sym_sqrt clamps small negatives and rejects real ones") {
  Vector diag(2);
  diag << 1.0, -1e-14;
  const SymMatrix s = SymMatrix::from_diagonal(diag);
  const SymMatrix r = sym_sqrt(s, 1e-10);
  CHECK(r(1, 1) == 0.0);
  Vector bad(2);
  bad << 1.0, -1e-3;
  CHECK_THROWS_AS(sym_sqrt(SymMatrix::from_diagonal(bad), 1e-10),
                  EigenvalueBelowTolerance);
}

TEST_CASE("sym_sqrt_inv composes back to the identity") {
  CHECK(inf_norm(sym_sqrt_inv(SymMatrix::identity(2)).mat() -
                 Matrix::Identity(2, 2)) < 1e-14);

  Vector diag(1);
  diag << 4.0;
  CHECK(sym_sqrt_inv(SymMatrix::from_diagonal(diag))(0, 0) ==
        doctest::Approx(0.5).epsilon(1e-14));

  const Matrix spd =
      testing::random_psd(6, 77) + 0.5 * Matrix::Identity(6, 6);
  const SymMatrix s(spd);
  CHECK(inf_norm(sym_sqrt_inv(s).mat() * sym_sqrt(s).mat() -
                 Matrix::Identity(6, 6)) < 1e-9);

  Vector singular(2);
  singular << 1.0, 0.0;
  CHECK_THROWS_AS(sym_sqrt_inv(SymMatrix::from_diagonal(singular)),
                  SingularCovariance);
}

TEST_CASE("hadamard") {
  Vector a(2), b(2);
  a << 1, 2;
  b << 3, 4;
  const Vector ab = hadamard(a, b);
  CHECK(ab(0) == 3.0);
  CHECK(ab(1) == 8.0);
  CHECK(hadamard(a, Vector::Ones(2)).isApprox(a, 0.0));
  CHECK(hadamard(a, Vector::Zero(2)).norm() == 0.0);
  Vector c(3);
  CHECK_THROWS_AS(hadamard(a, c), LengthMismatch);
}

TEST_CASE("loglog_slope exact power laws") {
  const std::vector<double> taus{1.0 / 8, 1.0 / 16, 1.0 / 32};
  std::vector<double> sq, lin;
  for (double t : taus) {
    sq.push_back(t * t);
    lin.push_back(3.7 * t);
  }
  CHECK(loglog_slope(taus, sq).slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(loglog_slope(taus, lin).slope == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("loglog_slope with multiplicative noise stays near 1.5") {
  rng::RngStream s(5, rng::kSpaceToy, 9);
  std::vector<double> taus, errs;
  for (int k = 2; k <= 7; ++k) {
    const double t = std::pow(2.0, -k);
    taus.push_back(t);
    errs.push_back(std::pow(t, 1.5) * (1.0 + 0.01 * s.normal()));
  }
  const double slope = loglog_slope(taus, errs).slope;
  CHECK(slope > 1.4);
  CHECK(slope < 1.6);
}

TEST_CASE("loglog_slope input validation") {
  std::vector<double> one{0.5}, ok{0.5, 0.25}, bad{0.5, -1.0};
  CHECK_THROWS_AS(loglog_slope(one, one), NonPositiveInput);
  CHECK_THROWS_AS(loglog_slope(ok, bad), NonPositiveInput);
}
