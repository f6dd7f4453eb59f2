#include "sme/schedules.hpp"

#include <cmath>

namespace sme {

double phi(double x, double c) { return x > c ? x : c; }
double phi_prime(double x, double c) { return x > c ? 1.0 : 0.0; }

Vector phi(const Vector& x, double c) {
  return x.unaryExpr([c](double v) { return phi(v, c); });
}
Vector phi_prime(const Vector& x, double c) {
  return x.unaryExpr([c](double v) { return phi_prime(v, c); });
}

double gamma_bar(long k, double lambda, double tau) {
  return 1.0 - std::pow(1.0 - lambda * tau, static_cast<double>(k));
}

double Gamma_bar(long k, double lambda1, double lambda2, double tau) {
  return std::sqrt(gamma_bar(k, lambda2, tau)) / gamma_bar(k + 1, lambda1, tau);
}

double series_rate(double lambda, double tau) {
  double acc = 0.0, p = lambda;  // p = lambda^k tau^{k-1}
  for (int k = 1; k <= 5; ++k) {
    acc += p / k;
    p *= lambda * tau;
  }
  return acc;
}

double gamma_continuous(int i, double t, double lambda, double tau) {
  const double r = series_rate(lambda, tau);
  const double arg = (i == 1) ? (t + tau) : t;
  return 1.0 - std::exp(-arg * r);
}

ScheduleFns::ScheduleFns(double lambda1, double lambda2, double tau,
                         double epsilon, double phi_threshold)
    : rate1_(series_rate(lambda1, tau)),
      rate2_(series_rate(lambda2, tau)),
      tau_(tau),
      eps_(epsilon),
      c_(phi_threshold) {}

double ScheduleFns::gamma1(double t) const {
  return 1.0 - std::exp(-(t + tau_) * rate1_);
}
double ScheduleFns::gamma2(double t) const {
  return 1.0 - std::exp(-t * rate2_);
}
double ScheduleFns::dgamma1(double t) const {
  return rate1_ * std::exp(-(t + tau_) * rate1_);
}
double ScheduleFns::dgamma2(double t) const {
  return rate2_ * std::exp(-t * rate2_);
}

double ScheduleFns::Gamma(double t) const {
  return std::sqrt(gamma2(t)) / gamma1(t);
}

double ScheduleFns::dGamma(double t) const {
  const double g1 = gamma1(t), g2 = gamma2(t);
  const double s = std::sqrt(g2);
  return (dgamma2(t) / (2.0 * s) * g1 - s * dgamma1(t)) / (g1 * g1);
}

Vector ScheduleFns::Q(double t, const Vector& u) const {
  const double e = eps_ * std::sqrt(gamma2(t));
  return u.unaryExpr(
      [this, e](double v) { return 1.0 / (std::sqrt(phi(v, c_)) + e); });
}

Vector ScheduleFns::dt_GammaQ(double t, const Vector& u) const {
  // d/dt [Gamma_t Q_t(u)] = Gamma' Q + Gamma * (-eps gamma2'/(2 sqrt(gamma2)) Q^2)
  const double g2 = gamma2(t);
  const double dg2 = dgamma2(t);
  const double gam = Gamma(t);
  const double dgam = dGamma(t);
  const double dq_factor = -eps_ * dg2 / (2.0 * std::sqrt(g2));
  Vector q = Q(t, u);
  return dgam * q + gam * dq_factor * q.cwiseProduct(q);
}

}  // namespace sme
