#include "sme/analysis.hpp"

#include <cmath>

namespace sme {

namespace {
double block_sq_norm(const auto& block, Eigen::Index d) {
  return block.squaredNorm() / static_cast<double>(d);
}
}  // namespace

std::vector<TestFunction> default_test_functions(Optimizer opt) {
  std::vector<TestFunction> fns;
  fns.push_back({"f1", [](const Vector& x, const StateLayout& l) {
                   return block_sq_norm(l.theta(x), l.d);
                 }});
  if (opt == Optimizer::Adam) {
    fns.push_back({"f2", [](const Vector& x, const StateLayout& l) {
                     return block_sq_norm(l.m(x), l.d);
                   }});
    fns.push_back({"f3", [](const Vector& x, const StateLayout& l) {
                     return block_sq_norm(l.u(x), l.d);
                   }});
  } else {
    fns.push_back({"f2", [](const Vector& x, const StateLayout& l) {
                     return block_sq_norm(l.u(x), l.d);
                   }});
  }
  return fns;
}

TestFunction test_function_by_name(const std::string& name, Optimizer opt) {
  for (auto& f : default_test_functions(opt))
    if (f.name == name) return f;
  throw ValidationError("unknown test function: " + name);
}

namespace {
struct Prepared {
  OptState start;
  long k0 = 0;
  long n = 0;
  std::vector<double> times;
  std::vector<TestFunction> fns;
  StateLayout layout;
};

Prepared prepare(const WeakErrorSetup& setup) {
  Prepared prep;
  prep.fns = setup.fns.empty() ? default_test_functions(setup.optimizer)
                               : setup.fns;
  prep.layout = {setup.problem->dim(), setup.optimizer == Optimizer::Adam};
  prep.start = setup.x0;
  const long warmup =
      setup.warmup_steps >= 0
          ? setup.warmup_steps
          : (setup.optimizer == Optimizer::Adam ? 2 : 0);
  if (warmup > 0) {
    const NoiseSource none(*setup.problem, NoiseMode::None, 1);
    rng::RngStream unused(0, rng::kSpaceDiscrete);
    for (long i = 0; i < warmup; ++i)
      prep.start = step(setup.optimizer, setup.regime, prep.start, setup.hyper,
                        *setup.problem, none, unused);
  }
  prep.k0 = prep.start.step_k;
  prep.n = setup.hyper.steps();
  if (prep.n <= prep.k0)
    throw ValidationError("weak_error: horizon leaves no steps after start");
  for (long k = prep.k0; k <= prep.n; ++k)
    prep.times.push_back(static_cast<double>(k) * setup.hyper.tau);
  return prep;
}
}  // namespace

WeakErrorResult weak_error(const WeakErrorSetup& setup) {
  if (!setup.problem) throw ValidationError("weak_error: problem required");
  const Prepared prep = prepare(setup);
  const int n_fns = static_cast<int>(prep.fns.size());
  const auto& h = setup.hyper;
  const NoiseSource noise(*setup.problem, setup.noise_mode, setup.batch_b0);

  auto discrete_paths = [&](long p, std::span<double> out) {
    rng::RngStream stream(setup.seed_discrete, rng::kSpaceDiscrete, p);
    OptState s = prep.start;
    std::size_t row = 0;
    auto emit = [&](const OptState& st) {
      const Vector flat = st.flat();
      for (int f = 0; f < n_fns; ++f)
        out[row * n_fns + f] = prep.fns[f].evaluate(flat, prep.layout);
      ++row;
    };
    emit(s);
    for (long k = prep.k0; k < prep.n; ++k) {
      s = step(setup.optimizer, setup.regime, s, h, *setup.problem, noise,
               stream);
      emit(s);
    }
  };
  const EnsembleStats stats_d =
      ensemble_reduce(discrete_paths, setup.n_paths_discrete, prep.times,
                      n_fns, setup.threads);

  const double t0 = static_cast<double>(prep.k0) * h.tau;
  const auto model =
      build_model(setup.order, setup.optimizer, setup.regime, h,
                  *setup.problem, t0, setup.generalized_lambda);
  IntegrationPlan plan;
  plan.dt = setup.dt > 0 ? setup.dt : h.tau * h.tau;
  plan.t_start = t0;
  plan.t_end = prep.times.back();
  plan.record_times = prep.times;
  plan.validate(h.tau);

  const Vector x0c = prep.start.flat();
  const bool deterministic = !model->has_W() && !model->has_B();
  const long n_paths_c = deterministic ? 1 : setup.n_paths_continuous;
  auto sde_paths = [&](long p, std::span<double> out) {
    rng::RngStream ws(setup.seed_continuous, rng::kSpaceContinuous, p, 0);
    rng::RngStream bs(setup.seed_continuous, rng::kSpaceContinuous, p, 1);
    integrate_path(*model, x0c, plan, ws, bs,
                   [&](int rec, double, const Vector& x) {
                     for (int f = 0; f < n_fns; ++f)
                       out[static_cast<std::size_t>(rec) * n_fns + f] =
                           prep.fns[f].evaluate(x, prep.layout);
                   });
  };
  const EnsembleStats stats_c =
      ensemble_reduce(sde_paths, n_paths_c, prep.times, n_fns, setup.threads);

  WeakErrorResult res;
  for (auto& f : prep.fns) res.fn_names.push_back(f.name);
  res.times = prep.times;
  res.mean_d = stats_d.mean;
  res.mean_c = stats_c.mean;
  res.error = (stats_d.mean - stats_c.mean).cwiseAbs();
  res.se = (stats_d.sem.cwiseAbs2() + stats_c.sem.cwiseAbs2()).cwiseSqrt();
  res.n_paths_d = stats_d.n_paths;
  res.n_paths_c = stats_c.n_paths;
  for (int f = 0; f < n_fns; ++f) {
    Eigen::Index arg = 0;
    res.max_error.push_back(res.error.col(f).maxCoeff(&arg));
    res.se_at_max.push_back(res.se(arg, f));
    res.t_at_max.push_back(prep.times[static_cast<std::size_t>(arg)]);
  }
  return res;
}

void fit_sweep_series(SweepSeries& series, double stderr_gate) {
  std::vector<double> xs, ys;
  for (auto& pt : series.points) {
    pt.used_in_fit =
        pt.max_error > 0 && pt.stderr_val <= stderr_gate * pt.max_error;
    if (pt.used_in_fit) {
      xs.push_back(pt.tau);
      ys.push_back(pt.max_error);
    } else {
      series.flagged = true;
    }
  }
  if (xs.size() >= 2) series.fit = loglog_slope(xs, ys);
}

SweepResult slope_sweep(WeakErrorSetup setup, const std::vector<double>& taus,
                        const SweepHooks& hooks, double stderr_gate) {
  if (taus.size() < 2)
    throw ValidationError("slope_sweep: need at least 2 tau values");
  SweepResult result;
  for (double tau : taus) {
    if (hooks.hyper) {
      setup.hyper = hooks.hyper(tau);
    } else {
      setup.hyper.tau = tau;
      setup.hyper.phi_threshold = tau;  // clamp threshold c = tau
    }
    if (hooks.paths_d) setup.n_paths_discrete = hooks.paths_d(tau);
    if (hooks.paths_c) setup.n_paths_continuous = hooks.paths_c(tau);
    if (hooks.warmup) setup.warmup_steps = hooks.warmup(tau);
    const WeakErrorResult we = weak_error(setup);
    if (result.series.empty()) {
      result.series.resize(we.fn_names.size());
      for (std::size_t f = 0; f < we.fn_names.size(); ++f)
        result.series[f].fn_name = we.fn_names[f];
    }
    for (std::size_t f = 0; f < we.fn_names.size(); ++f) {
      SweepPoint pt;
      pt.tau = tau;
      pt.max_error = we.max_error[f];
      pt.stderr_val = we.se_at_max[f];
      pt.n_paths_d = we.n_paths_d;
      pt.n_paths_c = we.n_paths_c;
      result.series[f].points.push_back(pt);
    }
  }
  for (auto& series : result.series) fit_sweep_series(series, stderr_gate);
  return result;
}

Vector analytic_mean_increment(Optimizer opt, Regime regime, const OptState& s,
                               const Hyper& h, const LossModel& problem) {
  const Eigen::Index d = problem.dim();
  const double tau = h.tau, s2 = h.sigma * h.sigma;
  const Vector grad = problem.grad_f(s.theta);
  const Vector sd = problem.sigma_d(s.theta);
  // E[g^2] = grad^2 + sigma^2 Sigma_d / tau^{regime exponent}
  const Vector gsq_mean =
      regime == Regime::Balistic
          ? Vector(grad.cwiseProduct(grad) + s2 * sd)
          : Vector(tau * grad.cwiseProduct(grad) + s2 * sd);
  if (opt == Optimizer::RMSprop) {
    Vector out(2 * d);
    const double eps = h.epsilon, c = h.phi_threshold;
    const Vector p = s.u.unaryExpr(
        [eps, c](double v) { return 1.0 / (std::sqrt(phi(v, c)) + eps); });
    out.head(d) = -tau * grad.cwiseProduct(p);
    out.tail(d) = h.lambda0 * tau * (gsq_mean - s.u);
    return out;
  }
  Vector out(3 * d);
  const double gbar2 = gamma_bar(s.step_k, h.lambda2, tau);
  const double gf = Gamma_bar(s.step_k, h.lambda1, h.lambda2, tau);
  const double eps_k = h.epsilon * std::sqrt(gbar2);
  const double c = h.phi_threshold;
  const Vector qbar = s.u.unaryExpr(
      [eps_k, c](double v) { return 1.0 / (std::sqrt(phi(v, c)) + eps_k); });
  const Vector m_next_mean = s.m + h.lambda1 * tau * (grad - s.m);
  out.head(d) = -tau * gf * m_next_mean.cwiseProduct(qbar);
  out.segment(d, d) = h.lambda1 * tau * (grad - s.m);
  out.tail(d) = h.lambda2 * tau * (gsq_mean - s.u);
  return out;
}

MomentCheckResult one_step_moment_check(Optimizer opt, Regime regime,
                                        int order, const OptState& s,
                                        const Hyper& h,
                                        const LossModel& problem,
                                        long n_samples, std::uint64_t seed,
                                        int threads, bool generalized_lambda) {
  const Vector x0 = s.flat();
  const Eigen::Index dim = x0.size();
  const int n_vals = static_cast<int>(dim + dim * dim);
  const std::vector<double> one_time{1.0};
  const NoiseSource noise(problem, NoiseMode::GaussianSurrogate, 1);

  auto pack = [dim](const Vector& delta, std::span<double> out) {
    for (Eigen::Index i = 0; i < dim; ++i) out[i] = delta(i);
    std::size_t k = dim;
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j) out[k++] = delta(i) * delta(j);
  };

  auto discrete_path = [&](long p, std::span<double> out) {
    rng::RngStream stream(seed, rng::kSpaceMoments, p, 0);
    const OptState next = step(opt, regime, s, h, problem, noise, stream);
    pack(next.flat() - x0, out);
  };
  const EnsembleStats st_d =
      ensemble_reduce(discrete_path, n_samples, one_time, n_vals, threads);

  const double t0 = static_cast<double>(s.step_k) * h.tau;
  const auto model = build_model(order, opt, regime, h, problem, t0,
                                 generalized_lambda);
  IntegrationPlan plan;
  plan.dt = h.tau * h.tau / 4.0;
  plan.t_start = t0;
  plan.t_end = t0 + h.tau;
  plan.record_times = {t0 + h.tau};
  auto sde_path = [&](long p, std::span<double> out) {
    rng::RngStream ws(seed, rng::kSpaceMoments, p, 1);
    rng::RngStream bs(seed, rng::kSpaceMoments, p, 2);
    integrate_path(*model, x0, plan, ws, bs,
                   [&](int, double, const Vector& x) { pack(x - x0, out); });
  };
  const bool deterministic = !model->has_W() && !model->has_B();
  const EnsembleStats st_c = ensemble_reduce(
      sde_path, deterministic ? 1 : n_samples, one_time, n_vals, threads);

  MomentCheckResult res;
  // stats matrices are 1 x n_vals, so the storage is one contiguous row.
  res.mean_d = Eigen::Map<const Vector>(st_d.mean.data(), dim);
  res.mean_c = Eigen::Map<const Vector>(st_c.mean.data(), dim);
  res.mean_d_se = Eigen::Map<const Vector>(st_d.sem.data(), dim);
  res.mean_c_se = Eigen::Map<const Vector>(st_c.sem.data(), dim);
  res.second_d =
      Eigen::Map<const Matrix>(st_d.mean.data() + dim, dim, dim).transpose();
  res.second_c =
      Eigen::Map<const Matrix>(st_c.mean.data() + dim, dim, dim).transpose();
  Matrix se_d2 =
      Eigen::Map<const Matrix>(st_d.sem.data() + dim, dim, dim).transpose();
  Matrix se_c2 =
      Eigen::Map<const Matrix>(st_c.sem.data() + dim, dim, dim).transpose();
  res.second_se = (se_d2.cwiseAbs2() + se_c2.cwiseAbs2()).cwiseSqrt();
  res.mean_analytic = analytic_mean_increment(opt, regime, s, h, problem);

  res.max_mean_diff = (res.mean_d - res.mean_c).cwiseAbs().maxCoeff();
  const Vector se =
      (res.mean_d_se.cwiseAbs2() + res.mean_c_se.cwiseAbs2()).cwiseSqrt();
  res.max_mean_diff_over_se =
      ((res.mean_d - res.mean_c).cwiseAbs().cwiseQuotient(
           se.cwiseMax(1e-300))).maxCoeff();
  res.max_second_diff = (res.second_d - res.second_c).cwiseAbs().maxCoeff();
  res.max_analytic_gap_over_se =
      ((res.mean_d - res.mean_analytic).cwiseAbs().cwiseQuotient(
           res.mean_d_se.cwiseMax(1e-300))).maxCoeff();
  return res;
}

}  // namespace sme
