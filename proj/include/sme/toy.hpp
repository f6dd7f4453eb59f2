#pragma once

#include <cstdint>
#include <vector>

#include "sme/numerics.hpp"

namespace sme {

enum class XiLaw { StandardNormal, Uniform };

// Scalar driver pair built from one iid noise sequence xi_k:
//   b_k = sqrt(tau) xi_k,  omega_k = (sqrt(tau)/kappa)(xi_k^2 - 1),
// tau = 1/N. Var(xi^2) = kappa^2: 2 for the normal law, 4/5 for
// uniform(-sqrt3, sqrt3). Both laws have E[xi]=0, Var=1, E[xi^3]=0.
struct ToyNoiseConfig {
  XiLaw xi_law = XiLaw::StandardNormal;
  long n = 10000;
  double kappa_sq() const { return xi_law == XiLaw::StandardNormal ? 2.0 : 0.8; }
};

double draw_xi(XiLaw law, rng::RngStream& stream);

struct ToyPaths {
  std::vector<double> b_partial;  // B_0..B_N, partial sums of b_j
  std::vector<double> w_partial;  // W_0..W_N, partial sums of omega_j
  // Piecewise-linear interpolation on [0, 1].
  double b_at(double t) const;
  double w_at(double t) const;
};

ToyPaths toy_build(const ToyNoiseConfig& config, rng::RngStream& stream);

struct ToyStats {
  long n = 0, replicas = 0;
  double corr_b_omega = 0;        // pooled over all (b_j, omega_j) pairs
  double corr_bound = 0;          // 4 / sqrt(N * replicas)
  double ks_b = 0, ks_w = 0;      // endpoint KS vs N(0,1)
  double ks_critical_1pct = 0;
  double covariation_mean = 0, covariation_se = 0;  // sum_j db_j dw_j
  std::vector<double> qv_times;   // realized quadratic variation of B vs t
  std::vector<double> qv_mean, qv_se;
  double var_xi_sq_mean = 0, var_xi_sq_se = 0;  // empirical Var(xi^2)
};

ToyStats toy_tests(const ToyNoiseConfig& config, long n_replicas,
                   std::uint64_t seed, int threads = 0);

// One-sample Kolmogorov-Smirnov statistic against N(0,1) (sorts a copy).
double ks_statistic_normal(std::vector<double> samples);
// Asymptotic critical value at significance alpha.
double ks_critical_value(long n, double alpha);

}  // namespace sme
