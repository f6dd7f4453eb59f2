#pragma once

#include <optional>
#include <string>

#include "sme/simulate.hpp"

namespace sme {

struct StateLayout {
  Eigen::Index d = 0;
  bool has_m = false;
  Eigen::Index dim() const { return d * (has_m ? 3 : 2); }
  auto theta(const Vector& x) const { return x.head(d); }
  auto m(const Vector& x) const { return x.segment(d, d); }
  auto u(const Vector& x) const { return x.tail(d); }
};

// Quadratic observables of one state block, polynomial growth of degree 2.
// f1 = |theta|^2/d; f2 = |m|^2/d (Adam) or |u|^2/d (RMSprop); f3 = |u|^2/d.
struct TestFunction {
  std::string name;
  std::function<double(const Vector&, const StateLayout&)> evaluate;
};
std::vector<TestFunction> default_test_functions(Optimizer opt);
TestFunction test_function_by_name(const std::string& name, Optimizer opt);

struct WeakErrorSetup {
  Optimizer optimizer = Optimizer::RMSprop;
  Regime regime = Regime::Balistic;
  int order = 1;
  Hyper hyper;
  const LossModel* problem = nullptr;
  OptState x0;  // raw initial state; Adam warms up two deterministic steps
  NoiseMode noise_mode = NoiseMode::Dataset;
  int batch_b0 = 1;
  bool generalized_lambda = false;
  // Deterministic warmup steps before both processes start; -1 means the
  // default protocol (2 for Adam, 0 for RMSprop). The continuous model
  // then begins at t0 = (x0.step_k + warmup) * tau.
  long warmup_steps = -1;
  long n_paths_discrete = 10000;
  long n_paths_continuous = 10000;
  std::uint64_t seed_discrete = 11;
  std::uint64_t seed_continuous = 12;
  double dt = 0.0;  // 0 -> tau^2
  int threads = 0;
  std::vector<TestFunction> fns;  // empty -> defaults for the optimizer
};

struct WeakErrorResult {
  std::vector<std::string> fn_names;
  std::vector<double> times;
  Matrix error;      // n_times x n_fns, |E_d - E_c|
  Matrix se;         // combined stderr sqrt(se_d^2 + se_c^2)
  Matrix mean_d, mean_c;
  std::vector<double> max_error, se_at_max, t_at_max;  // per fn
  long n_paths_d = 0, n_paths_c = 0;
};

// Ensemble means of the test functions along the discrete trajectory at
// steps k and the continuous model at times k tau, and their absolute
// difference. Both sides share the initial condition (for Adam, the
// deterministically computed second iterate at t0 = 2 tau).
WeakErrorResult weak_error(const WeakErrorSetup& setup);

struct SweepPoint {
  double tau = 0;
  double max_error = 0;
  double stderr_val = 0;
  long n_paths_d = 0, n_paths_c = 0;
  bool used_in_fit = true;
};

struct SweepSeries {
  std::string fn_name;
  std::vector<SweepPoint> points;
  std::optional<LineFit> fit;
  bool flagged = false;  // some point failed the stderr gate
};

struct SweepResult {
  std::vector<SweepSeries> series;
};

// Per-tau knobs for slope_sweep. hyper defaults to retuning tau and the
// clamp threshold c = tau on the setup's hyper; the others default to the
// setup's fixed values.
struct SweepHooks {
  std::function<Hyper(double)> hyper;
  std::function<long(double)> paths_d, paths_c;
  std::function<long(double)> warmup;
};

// Runs weak_error per tau and fits the log-log slope of the max errors.
// Points whose stderr exceeds gate * error are excluded and flagged.
SweepResult slope_sweep(WeakErrorSetup setup, const std::vector<double>& taus,
                        const SweepHooks& hooks = {},
                        double stderr_gate = 0.25);

// Gate + fit over precomputed points (used by slope_sweep and tests).
void fit_sweep_series(SweepSeries& series, double stderr_gate);

// Closed-form conditional mean increment of one discrete step,
// E[x_{k+1} - x_k | x_k], exact given E[z]=0 and Cov(z)=tau Sigma.
Vector analytic_mean_increment(Optimizer opt, Regime regime, const OptState& s,
                               const Hyper& h, const LossModel& problem);

struct MomentCheckResult {
  Vector mean_d, mean_c, mean_analytic;
  Vector mean_d_se, mean_c_se;
  Matrix second_d, second_c;  // E[Delta Delta^T]
  Matrix second_se;           // combined stderr, entrywise
  double max_mean_diff = 0;   // max |mean_d - mean_c|
  double max_mean_diff_over_se = 0;
  double max_second_diff = 0;
  double max_analytic_gap_over_se = 0;  // discrete MC vs closed form
};

// Monte-Carlo moments of one discrete step vs one SDE step of length tau
// (substep tau^2/4), from a fixed state, Gaussian-surrogate noise. The
// shared leading term of the second moments cancels in the difference.
MomentCheckResult one_step_moment_check(Optimizer opt, Regime regime,
                                        int order, const OptState& s,
                                        const Hyper& h,
                                        const LossModel& problem,
                                        long n_samples, std::uint64_t seed,
                                        int threads = 0,
                                        bool generalized_lambda = false);

}  // namespace sme
