// Scratch diagnostic (not part of the suite): localize the Adam order-2
// weak-error failure between coefficient bugs and the singular start.

#include <cstdio>

#include "sme/analysis.hpp"
#include "sme/config.hpp"

using namespace sme;

int main() {
  const QuadraticGaussianProblem p(
      {6, 2024001, 2024002, 128000, DataMode::Empirical,
       MMode::GaussianAnalytic});

  auto hyper = [](double tau) {
    Hyper h;
    h.lambda0 = h.lambda1 = h.lambda2 = 1.0;
    h.epsilon = 1e-6;
    h.sigma = 1.0;
    h.tau = tau;
    h.horizon_T = 5.0;
    h.phi_threshold = tau;
    return h;
  };

  // 1) one-step moments at a generic state, fixed t0 = 0.5
  std::printf("=== one-step moments, generic state, t0=0.5 ===\n");
  {
    std::vector<double> taus{0.125, 0.0625, 0.03125}, d1, d2;
    for (double tau : taus) {
      OptState x;
      x.theta = default_initial_state(Optimizer::Adam, p, 2024001).theta;
      x.m = 0.5 * Vector::Ones(6);
      x.u = Vector::Ones(6);
      x.step_k = static_cast<long>(0.5 / tau);
      const auto r = one_step_moment_check(Optimizer::Adam, Regime::Balistic,
                                           2, x, hyper(tau), p, 400000, 777);
      d1.push_back(r.max_mean_diff);
      d2.push_back(r.max_second_diff);
      std::printf("tau=%g first=%.3e (%.1f se) second=%.3e analytic=%.1f se\n",
                  tau, r.max_mean_diff, r.max_mean_diff_over_se,
                  r.max_second_diff, r.max_analytic_gap_over_se);
    }
    std::printf("first slope=%.2f second slope=%.2f\n",
                loglog_slope(taus, d1).slope, loglog_slope(taus, d2).slope);
  }

  // 2) one-step moments at the second iterate, t0 = 2 tau
  std::printf("=== one-step moments at the second iterate, t0=2tau ===\n");
  {
    std::vector<double> taus{0.125, 0.0625, 0.03125}, d1, d2;
    for (double tau : taus) {
      const Hyper h = hyper(tau);
      OptState x0 = default_initial_state(Optimizer::Adam, p, 2024001);
      const OptState x = adam_second_iterate(Regime::Balistic, x0, h, p);
      const auto r = one_step_moment_check(Optimizer::Adam, Regime::Balistic,
                                           2, x, h, p, 400000, 778);
      d1.push_back(r.max_mean_diff);
      d2.push_back(r.max_second_diff);
      std::printf("tau=%g first=%.3e (%.1f se) second=%.3e analytic=%.1f se\n",
                  tau, r.max_mean_diff, r.max_mean_diff_over_se,
                  r.max_second_diff, r.max_analytic_gap_over_se);
    }
    std::printf("first slope=%.2f second slope=%.2f\n",
                loglog_slope(taus, d1).slope, loglog_slope(taus, d2).slope);
  }

  // 3) weak-error sweep with fixed t_start = 0.5
  std::printf("=== adam order-2 sweep, fixed t_start=0.5 ===\n");
  {
    WeakErrorSetup s;
    s.optimizer = Optimizer::Adam;
    s.regime = Regime::Balistic;
    s.order = 2;
    s.hyper = hyper(0.125);
    s.problem = &p;
    s.x0 = default_initial_state(Optimizer::Adam, p, 2024001);
    s.noise_mode = NoiseMode::GaussianSurrogate;
    s.seed_discrete = 52001;
    s.seed_continuous = 52002;
    s.n_paths_discrete = 120000;
    s.n_paths_continuous = 30000;
    SweepHooks hooks;
    hooks.hyper = [&](double tau) { return hyper(tau); };
    hooks.warmup = [](double tau) {
      return static_cast<long>(0.5 / tau + 0.5);
    };
    const SweepResult sweep =
        slope_sweep(s, {0.125, 0.0625, 0.03125}, hooks);
    for (const auto& sr : sweep.series) {
      std::printf("%s:", sr.fn_name.c_str());
      for (const auto& pt : sr.points)
        std::printf(" (tau=%g err=%.3e se=%.1e)", pt.tau, pt.max_error,
                    pt.stderr_val);
      std::printf(" slope=%.3f\n", sr.fit ? sr.fit->slope : std::nan(""));
    }
  }
  return 0;
}
