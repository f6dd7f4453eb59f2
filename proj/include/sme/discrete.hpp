#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sme/problem.hpp"
#include "sme/schedules.hpp"

namespace sme {

enum class Optimizer { RMSprop, Adam };
enum class Regime { Balistic, BatchEquivalent };

// balistic:         tau = eta,   1-beta_i = lambda_i eta,   B = sigma^-2
// batch-equivalent: tau = eta^2, 1-beta_i = lambda_i eta^2, eps = eta^-1 eps0,
//                   B = sigma^-2 eta^2
std::string to_string(Optimizer o);
std::string to_string(Regime r);

struct Hyper {
  double lambda0 = 0.5;
  double lambda1 = 1.0;
  double lambda2 = 0.5;
  double epsilon = 1e-6;
  double sigma = 1.0;
  double tau = 0.125;
  double horizon_T = 10.0;
  double phi_threshold = 0.125;  // clamp threshold c, defaults to tau

  long steps() const { return static_cast<long>(horizon_T / tau); }
  // Throws ValidationError naming the violated invariant.
  void validate() const;
};

// Discrete/continuous optimizer state. m is present only for Adam.
struct OptState {
  Vector theta;
  Vector u;
  Vector m;  // empty for RMSprop
  long step_k = 0;

  bool has_m() const { return m.size() > 0; }
  // Flat layout [theta; (m); u], shared with the SDE state vectors.
  Vector flat() const;
  static OptState from_flat(const Vector& x, Eigen::Index d, bool has_m,
                            long step_k);
};

enum class NoiseMode { Dataset, GaussianSurrogate, None };

// Draws z_k with Cov(z_k) = tau Sigma(theta): sqrt(tau B0) times a B0-sample
// deviation, or sqrt(tau) Sigma^{1/2} xi in the Gaussian-surrogate mode
// (exact low-skewness). None gives z = 0 (deterministic dynamics).
class NoiseSource {
 public:
  NoiseSource(const LossModel& problem, NoiseMode mode, int b0);
  Vector draw_z(const Vector& theta, double tau, rng::RngStream& stream) const;
  NoiseMode mode() const { return mode_; }

 private:
  const LossModel* problem_;
  NoiseMode mode_;
  int b0_;
  Matrix sigma_sqrt_cached_;  // only when constant_sigma()
};

OptState step_rmsprop(Regime regime, const OptState& s, const Hyper& h,
                      const LossModel& problem, const NoiseSource& noise,
                      rng::RngStream& stream);
OptState step_adam(Regime regime, const OptState& s, const Hyper& h,
                   const LossModel& problem, const NoiseSource& noise,
                   rng::RngStream& stream);
OptState step(Optimizer opt, Regime regime, const OptState& s, const Hyper& h,
              const LossModel& problem, const NoiseSource& noise,
              rng::RngStream& stream);

// Applies the step N = floor(T/tau) times from s.step_k, recording every
// record_every steps (state 0 and state N always included).
std::vector<OptState> run_discrete(Optimizer opt, Regime regime,
                                   const OptState& x0, const Hyper& h,
                                   const LossModel& problem,
                                   const NoiseSource& noise,
                                   rng::RngStream& stream,
                                   long record_every = 1);

// Initial Adam state advanced by two noise-free steps (the continuous
// models start from there, at t = 2 tau).
OptState adam_second_iterate(Regime regime, const OptState& x0, const Hyper& h,
                             const LossModel& problem);

// CSV columns: step, t, theta_0.., m_0.. (Adam), u_0..; '#' manifest line
// is prepended by the caller.
void write_trajectory_csv(std::ostream& out, const std::vector<OptState>& traj,
                          double tau);

OptState default_initial_state(Optimizer opt, const LossModel& problem,
                               std::uint64_t problem_seed);

}  // namespace sme
