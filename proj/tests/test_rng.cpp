#include <doctest.h>

#include <cmath>

#include "sme/numerics.hpp"

using namespace sme;

TEST_CASE("streams are deterministic and independent by id") {
  rng::RngStream a(42, rng::kSpaceDiscrete, 3, 0);
  rng::RngStream b(42, rng::kSpaceDiscrete, 3, 0);
  rng::RngStream c(42, rng::kSpaceDiscrete, 4, 0);
  const Vector va = gaussian_vector(a, 16);
  const Vector vb = gaussian_vector(b, 16);
  const Vector vc = gaussian_vector(c, 16);
  CHECK(va.isApprox(vb, 0.0));
  CHECK(!va.isApprox(vc, 1e-12));
}

TEST_CASE("uniform01 lies in (0,1]") {
  rng::RngStream s(7, rng::kSpaceToy);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform01();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("normal sample moments at CLT scale") {
  rng::RngStream s(11, rng::kSpaceToy, 1);
  const long n = 1000000;
  double sum = 0, sumsq = 0;
  for (long i = 0; i < n; ++i) {
    const double x = s.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.005);      // 4 sigma at 1e6 samples is 0.004
  CHECK(std::abs(var - 1.0) < 0.01);  // 4 sigma is ~0.0057
}

TEST_CASE("sign patterns of normal 4-tuples pass a chi-square check") {
  rng::RngStream s(13, rng::kSpaceToy, 2);
  const long n = 100000;
  long counts[16] = {0};
  for (long i = 0; i < n; ++i) {
    int pattern = 0;
    for (int b = 0; b < 4; ++b)
      pattern = (pattern << 1) | (s.normal() > 0.0 ? 1 : 0);
    ++counts[pattern];
  }
  const double expected = static_cast<double>(n) / 16.0;
  double chi2 = 0;
  for (long cnt : counts) {
    const double diff = static_cast<double>(cnt) - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 37.7);  // chi-square df=15 at the 0.1% level
}

TEST_CASE("index stays in range and covers all cells") {
  rng::RngStream s(17, rng::kSpaceDataset);
  const std::uint64_t n = 10;
  long counts[10] = {0};
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t k = s.index(n);
    REQUIRE(k < n);
    ++counts[k];
  }
  for (long cnt : counts) {
    CHECK(cnt > 9000);  // expected 10000 each, 4 sigma is ~380
    CHECK(cnt < 11000);
  }
}
