#include "sme/discrete.hpp"

#include <cmath>
#include <ostream>

namespace sme {

std::string to_string(Optimizer o) {
  return o == Optimizer::RMSprop ? "rmsprop" : "adam";
}
std::string to_string(Regime r) {
  return r == Regime::Balistic ? "balistic" : "batch-equivalent";
}

void Hyper::validate() const {
  if (!(lambda0 > 0 && lambda1 > 0 && lambda2 > 0))
    throw ValidationError("hyper: lambdas must be > 0");
  if (!(epsilon > 0)) throw ValidationError("hyper: epsilon must be > 0");
  if (!(sigma > 0)) throw ValidationError("hyper: sigma must be > 0");
  if (!(tau > 0 && tau < 1)) throw ValidationError("hyper: tau in (0,1) required");
  if (!(tau < horizon_T)) throw ValidationError("hyper: tau < horizon_T required");
  if (!(tau < 0.5 / lambda0))
    throw ValidationError("hyper: tau < 1/(2*lambda0) required");
  if (!(tau < 0.5 / lambda2))
    throw ValidationError("hyper: tau < 1/(2*lambda2) required");
  if (!(phi_threshold > 0))
    throw ValidationError("hyper: phi_threshold must be > 0");
}

Vector OptState::flat() const {
  const Eigen::Index d = theta.size();
  Vector x(d * (has_m() ? 3 : 2));
  x.head(d) = theta;
  if (has_m()) {
    x.segment(d, d) = m;
    x.tail(d) = u;
  } else {
    x.tail(d) = u;
  }
  return x;
}

OptState OptState::from_flat(const Vector& x, Eigen::Index d, bool has_m,
                             long step_k) {
  OptState s;
  s.theta = x.head(d);
  if (has_m) s.m = x.segment(d, d);
  s.u = x.tail(d);
  s.step_k = step_k;
  return s;
}

NoiseSource::NoiseSource(const LossModel& problem, NoiseMode mode, int b0)
    : problem_(&problem), mode_(mode), b0_(b0) {
  if (b0 < 1) throw ValidationError("noise: batch_b0 >= 1 required");
  if (mode == NoiseMode::GaussianSurrogate && problem.constant_sigma())
    sigma_sqrt_cached_ = problem.sigma_sqrt(Vector::Zero(problem.dim())).mat();
}

Vector NoiseSource::draw_z(const Vector& theta, double tau,
                           rng::RngStream& stream) const {
  switch (mode_) {
    case NoiseMode::None:
      return Vector::Zero(theta.size());
    case NoiseMode::GaussianSurrogate: {
      const Vector xi = gaussian_vector(stream, theta.size());
      if (sigma_sqrt_cached_.size() > 0)
        return std::sqrt(tau) * (sigma_sqrt_cached_ * xi);
      return std::sqrt(tau) * (problem_->sigma_sqrt(theta).mat() * xi);
    }
    case NoiseMode::Dataset:
    default:
      // z = sqrt(tau B0) * (1/B0) sum dev, so Cov(z) = tau Sigma.
      return std::sqrt(tau * b0_) *
             problem_->sample_deviation(theta, b0_, stream);
  }
}

namespace {
inline Vector precond(const Vector& u, double eps, double c) {
  return u.unaryExpr(
      [eps, c](double v) { return 1.0 / (std::sqrt(phi(v, c)) + eps); });
}

inline Vector gradient_estimate(Regime regime, const Vector& grad,
                                const Vector& z, double sigma, double tau) {
  const double pref =
      regime == Regime::Balistic ? sigma / std::sqrt(tau) : sigma / tau;
  return grad + pref * z;
}
}  // namespace

OptState step_rmsprop(Regime regime, const OptState& s, const Hyper& h,
                      const LossModel& problem, const NoiseSource& noise,
                      rng::RngStream& stream) {
  const double tau = h.tau;
  const Vector z = noise.draw_z(s.theta, tau, stream);
  const Vector g = gradient_estimate(regime, problem.grad_f(s.theta), z,
                                     h.sigma, tau);
  const Vector p = precond(s.u, h.epsilon, h.phi_threshold);
  const double usq_coeff =
      regime == Regime::Balistic ? h.lambda0 * tau : h.lambda0 * tau * tau;

  OptState next;
  next.theta = s.theta - tau * g.cwiseProduct(p);
  next.u = s.u - h.lambda0 * tau * s.u + usq_coeff * g.cwiseProduct(g);
  next.step_k = s.step_k + 1;
  require_finite(next.theta, "rmsprop theta", next.step_k);
  require_finite(next.u, "rmsprop u", next.step_k);
  return next;
}

OptState step_adam(Regime regime, const OptState& s, const Hyper& h,
                   const LossModel& problem, const NoiseSource& noise,
                   rng::RngStream& stream) {
  const double tau = h.tau;
  const Vector z = noise.draw_z(s.theta, tau, stream);
  const Vector g = gradient_estimate(regime, problem.grad_f(s.theta), z,
                                     h.sigma, tau);
  const double usq_coeff =
      regime == Regime::Balistic ? h.lambda2 * tau : h.lambda2 * tau * tau;

  const long k = s.step_k;
  const double gbar2 = gamma_bar(k, h.lambda2, tau);
  const double gamma_factor = Gamma_bar(k, h.lambda1, h.lambda2, tau);
  const double eps_k = h.epsilon * std::sqrt(gbar2);
  const Vector qbar = precond(s.u, eps_k, h.phi_threshold);

  OptState next;
  // theta update uses m_{k+1}, not m_k.
  next.m = s.m - h.lambda1 * tau * s.m + h.lambda1 * tau * g;
  next.theta = s.theta - tau * gamma_factor * next.m.cwiseProduct(qbar);
  next.u = s.u - h.lambda2 * tau * s.u + usq_coeff * g.cwiseProduct(g);
  next.step_k = k + 1;
  require_finite(next.theta, "adam theta", next.step_k);
  require_finite(next.m, "adam m", next.step_k);
  require_finite(next.u, "adam u", next.step_k);
  return next;
}

OptState step(Optimizer opt, Regime regime, const OptState& s, const Hyper& h,
              const LossModel& problem, const NoiseSource& noise,
              rng::RngStream& stream) {
  return opt == Optimizer::RMSprop
             ? step_rmsprop(regime, s, h, problem, noise, stream)
             : step_adam(regime, s, h, problem, noise, stream);
}

std::vector<OptState> run_discrete(Optimizer opt, Regime regime,
                                   const OptState& x0, const Hyper& h,
                                   const LossModel& problem,
                                   const NoiseSource& noise,
                                   rng::RngStream& stream, long record_every) {
  if (record_every < 1) record_every = 1;
  const long n = h.steps();
  std::vector<OptState> traj;
  traj.reserve(static_cast<std::size_t>(n / record_every + 2));
  traj.push_back(x0);
  OptState s = x0;
  for (long k = 0; k < n; ++k) {
    s = step(opt, regime, s, h, problem, noise, stream);
    if ((k + 1) % record_every == 0 || k + 1 == n) traj.push_back(s);
  }
  return traj;
}

OptState adam_second_iterate(Regime regime, const OptState& x0, const Hyper& h,
                             const LossModel& problem) {
  NoiseSource none(problem, NoiseMode::None, 1);
  rng::RngStream unused(0, rng::kSpaceDiscrete);
  OptState s = step_adam(regime, x0, h, problem, none, unused);
  return step_adam(regime, s, h, problem, none, unused);
}

void write_trajectory_csv(std::ostream& out, const std::vector<OptState>& traj,
                          double tau) {
  if (traj.empty()) return;
  const Eigen::Index d = traj.front().theta.size();
  const bool has_m = traj.front().has_m();
  out << "step,t";
  for (Eigen::Index i = 0; i < d; ++i) out << ",theta_" << i;
  if (has_m)
    for (Eigen::Index i = 0; i < d; ++i) out << ",m_" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",u_" << i;
  out << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (const auto& s : traj) {
    out << s.step_k;
    put(static_cast<double>(s.step_k) * tau);
    for (Eigen::Index i = 0; i < d; ++i) put(s.theta(i));
    if (has_m)
      for (Eigen::Index i = 0; i < d; ++i) put(s.m(i));
    for (Eigen::Index i = 0; i < d; ++i) put(s.u(i));
    out << "\n";
  }
}

OptState default_initial_state(Optimizer opt, const LossModel& problem,
                               std::uint64_t problem_seed) {
  const Eigen::Index d = problem.dim();
  rng::RngStream st(problem_seed, rng::kSpaceProblem, /*path=*/7);
  OptState s;
  s.theta = gaussian_vector(st, d);
  s.u = Vector::Ones(d);
  if (opt == Optimizer::Adam) s.m = Vector::Zero(d);
  s.step_k = 0;
  return s;
}

}  // namespace sme
