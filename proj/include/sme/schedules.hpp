#pragma once

#include "sme/numerics.hpp"

namespace sme {

// Second-momentum clamp: phi(x) = max(x, c). Leaves the discrete dynamics
// untouched when trajectories stay above c, but keeps the SDE coefficients
// defined when order-2 noise drives u below zero. At the kink the
// subgradient 0 is used.
double phi(double x, double c);
double phi_prime(double x, double c);  // 1 if x > c else 0
Vector phi(const Vector& x, double c);
Vector phi_prime(const Vector& x, double c);

// Discrete bias-correction schedules:
//   gamma_bar_i(k) = 1 - (1 - lambda_i tau)^k,
//   Gamma_bar_k    = sqrt(gamma_bar_2(k)) / gamma_bar_1(k+1).
double gamma_bar(long k, double lambda, double tau);
double Gamma_bar(long k, double lambda1, double lambda2, double tau);

// Degree-5 truncation of -ln(1 - lambda tau) / tau.
double series_rate(double lambda, double tau);

// Continuous schedules: gamma_1 carries the (t + tau) offset mirroring
// Gamma_bar's use of gamma_bar_1 at k+1; gamma_2 uses t directly.
double gamma_continuous(int i, double t, double lambda, double tau);

// Time-dependent Adam coefficients bundled for the SDE models.
class ScheduleFns {
 public:
  ScheduleFns(double lambda1, double lambda2, double tau, double epsilon,
              double phi_threshold);

  double gamma1(double t) const;
  double gamma2(double t) const;
  double dgamma1(double t) const;
  double dgamma2(double t) const;
  double Gamma(double t) const;    // sqrt(gamma2)/gamma1, singular at t=0
  double dGamma(double t) const;

  // Q_t(u) = (sqrt(phi(u)) + eps sqrt(gamma2(t)))^{-1}, entrywise.
  Vector Q(double t, const Vector& u) const;
  // d/dt of the map t -> Gamma_t Q_t(u) at fixed u, entrywise.
  Vector dt_GammaQ(double t, const Vector& u) const;

 private:
  double rate1_, rate2_, tau_, eps_, c_;
};

}  // namespace sme
