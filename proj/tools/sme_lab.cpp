// sme_lab: simulation laboratory for rescaled RMSprop/Adam dynamics and
// their order-1/order-2 continuous approximations.
//
// Subcommands: simulate, weak-error, sweep, toy, moments, gen-problem.
// Exit codes: 0 ok, 2 usage/config error, 3 numeric failure.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>

#include "sme/reports.hpp"

namespace {

using namespace sme;

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

struct Overrides {
  std::string config_path;
  std::string optimizer, regime, noise_mode, format = "csv";
  int order = 0;
  double tau = 0, horizon = 0, t_start = -1, sigma = -1, epsilon = -1;
  std::vector<double> tau_list;
  long paths = 0, paths_discrete = 0, paths_continuous = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::string out_path;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "config file");
  cmd->add_option("--optimizer", o.optimizer, "rmsprop|adam");
  cmd->add_option("--regime", o.regime, "balistic|batch-equivalent");
  cmd->add_option("--order", o.order, "1|2");
  cmd->add_option("--tau", o.tau, "time step");
  cmd->add_option("--tau-list", o.tau_list, "decreasing tau values")
      ->delimiter(',');
  cmd->add_option("--horizon", o.horizon, "time horizon T");
  cmd->add_option("--t-start", o.t_start, "continuous start time (adam)");
  cmd->add_option("--sigma", o.sigma, "noise scale sigma");
  cmd->add_option("--epsilon", o.epsilon, "preconditioner epsilon");
  cmd->add_option("--noise-mode", o.noise_mode, "dataset|gaussian-surrogate");
  cmd->add_option("--paths", o.paths, "paths for both ensembles");
  cmd->add_option("--paths-discrete", o.paths_discrete, "");
  cmd->add_option("--paths-continuous", o.paths_continuous, "");
  auto* seed_opt = cmd->add_option("--seed", o.seed, "base seed");
  seed_opt->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--threads", o.threads, "worker cap (SME_LAB_THREADS)");
  cmd->add_option("--out", o.out_path, "output file (default stdout)");
  cmd->add_option("--format", o.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig load_config(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) c = parse_config(read_text_file(o.config_path));
  if (!o.optimizer.empty()) {
    if (o.optimizer == "rmsprop") c.optimizer = Optimizer::RMSprop;
    else if (o.optimizer == "adam") c.optimizer = Optimizer::Adam;
    else throw ValidationError("--optimizer: rmsprop|adam");
  }
  if (!o.regime.empty()) {
    if (o.regime == "balistic") c.regime = Regime::Balistic;
    else if (o.regime == "batch-equivalent") c.regime = Regime::BatchEquivalent;
    else throw ValidationError("--regime: balistic|batch-equivalent");
  }
  if (!o.noise_mode.empty()) {
    if (o.noise_mode == "dataset") c.noise_mode = NoiseMode::Dataset;
    else if (o.noise_mode == "gaussian-surrogate")
      c.noise_mode = NoiseMode::GaussianSurrogate;
    else throw ValidationError("--noise-mode: dataset|gaussian-surrogate");
  }
  if (o.order) c.order = o.order;
  if (o.tau > 0) c.tau = o.tau;
  if (!o.tau_list.empty()) c.tau_list = o.tau_list;
  if (o.horizon > 0) c.horizon_T = o.horizon;
  if (o.t_start >= 0) c.t_start = o.t_start;
  if (o.sigma > 0) c.sigma = o.sigma;
  if (o.epsilon > 0) c.epsilon = o.epsilon;
  if (o.paths > 0) c.paths_discrete = c.paths_continuous = o.paths;
  if (o.paths_discrete > 0) c.paths_discrete = o.paths_discrete;
  if (o.paths_continuous > 0) c.paths_continuous = o.paths_continuous;
  if (o.seed_set) {
    c.seed_discrete = o.seed;
    c.seed_continuous = o.seed + 1;
  }
  if (o.threads > 0) c.threads = o.threads;
  validate_config(c);
  return c;
}

long adam_warmup(const ExperimentConfig& c, double tau) {
  if (c.optimizer != Optimizer::Adam) return 0;
  return static_cast<long>(std::floor(*c.t_start / tau + 1e-9));
}

WeakErrorSetup make_setup(const ExperimentConfig& c,
                          const QuadraticGaussianProblem& problem,
                          double tau) {
  WeakErrorSetup s;
  s.optimizer = c.optimizer;
  s.regime = c.regime;
  s.order = c.order;
  s.hyper = make_hyper(c, tau);
  s.problem = &problem;
  s.x0 = default_initial_state(c.optimizer, problem, c.seed_problem);
  s.noise_mode = c.noise_mode;
  s.batch_b0 = c.batch_b0;
  s.generalized_lambda = c.generalized_lambda;
  s.warmup_steps = adam_warmup(c, tau);
  s.n_paths_discrete = c.paths_discrete > 0
                           ? c.paths_discrete
                           : default_paths(c.order, c.horizon_T, tau);
  s.n_paths_continuous = c.paths_continuous > 0
                             ? c.paths_continuous
                             : default_paths(c.order, c.horizon_T, tau);
  s.seed_discrete = c.seed_discrete;
  s.seed_continuous = c.seed_continuous;
  if (c.dt) s.dt = *c.dt;
  s.threads = c.threads;
  if (!c.test_functions.empty())
    for (const auto& name : c.test_functions)
      s.fns.push_back(test_function_by_name(name, c.optimizer));
  return s;
}

nlohmann::json params_json(const ExperimentConfig& c) {
  return nlohmann::json{{"optimizer", to_string(c.optimizer)},
                        {"regime", to_string(c.regime)},
                        {"order", c.order},
                        {"d", c.d},
                        {"horizon_T", c.horizon_T},
                        {"sigma", c.sigma},
                        {"epsilon", c.epsilon},
                        {"version", version_string()}};
}

struct OutputSink {
  std::string path;
  RunManifest manifest;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  std::string started = iso_now();

  void deliver(const std::string& payload) {
    if (path.empty()) {
      std::cout << payload;
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open output file " + path);
    f << payload;
    manifest.outputs.push_back(path);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::ofstream mf(path + ".manifest.json");
    mf << manifest.to_json(wall, started, iso_now()).dump(2) << "\n";
  }
};

OutputSink make_sink(const std::string& subcommand, const ExperimentConfig& c,
                     const Overrides& o, const std::vector<std::string>& extra) {
  OutputSink sink;
  sink.path = o.out_path;
  sink.manifest.subcommand = subcommand;
  // The worker count is an execution detail, not part of the experiment
  // identity: outputs must hash identically across thread counts.
  ExperimentConfig snapshot = c;
  snapshot.threads = 0;
  sink.manifest.config_text = serialize_config(snapshot);
  sink.manifest.args = extra;
  return sink;
}

// Ensemble mean of the test functions over the k tau grid, one side only.
EnsembleStats run_series(const ExperimentConfig& c,
                         const QuadraticGaussianProblem& problem,
                         const std::string& source,
                         std::vector<std::string>& fn_names) {
  const double tau = c.tau;
  WeakErrorSetup s = make_setup(c, problem, tau);
  auto fns = s.fns.empty() ? default_test_functions(c.optimizer) : s.fns;
  for (auto& f : fns) fn_names.push_back(f.name);
  const StateLayout layout{problem.dim(), c.optimizer == Optimizer::Adam};
  const int n_fns = static_cast<int>(fns.size());

  OptState start = s.x0;
  if (s.warmup_steps > 0) {
    const NoiseSource none(problem, NoiseMode::None, 1);
    rng::RngStream unused(0, rng::kSpaceDiscrete);
    for (long i = 0; i < s.warmup_steps; ++i)
      start = step(c.optimizer, c.regime, start, s.hyper, problem, none, unused);
  }
  const long k0 = start.step_k;
  const long n = s.hyper.steps();
  std::vector<double> times;
  for (long k = k0; k <= n; ++k) times.push_back(static_cast<double>(k) * tau);

  if (source == "discrete") {
    const NoiseSource noise(problem, c.noise_mode, c.batch_b0);
    auto path = [&](long p, std::span<double> out) {
      rng::RngStream stream(c.seed_discrete, rng::kSpaceDiscrete, p);
      OptState st = start;
      std::size_t row = 0;
      auto emit = [&](const OptState& cur) {
        const Vector flat = cur.flat();
        for (int f = 0; f < n_fns; ++f)
          out[row * n_fns + f] = fns[f].evaluate(flat, layout);
        ++row;
      };
      emit(st);
      for (long k = k0; k < n; ++k) {
        st = step(c.optimizer, c.regime, st, s.hyper, problem, noise, stream);
        emit(st);
      }
    };
    return ensemble_reduce(path, s.n_paths_discrete, times, n_fns, c.threads);
  }

  const auto model = build_model(c.order, c.optimizer, c.regime, s.hyper,
                                 problem, static_cast<double>(k0) * tau,
                                 c.generalized_lambda);
  IntegrationPlan plan;
  plan.dt = c.dt ? *c.dt : tau * tau;
  plan.t_start = static_cast<double>(k0) * tau;
  plan.t_end = times.back();
  plan.record_times = times;
  plan.validate(tau);
  const Vector x0 = start.flat();
  const bool deterministic = !model->has_W() && !model->has_B();
  auto path = [&](long p, std::span<double> out) {
    rng::RngStream ws(c.seed_continuous, rng::kSpaceContinuous, p, 0);
    rng::RngStream bs(c.seed_continuous, rng::kSpaceContinuous, p, 1);
    integrate_path(*model, x0, plan, ws, bs,
                   [&](int rec, double, const Vector& x) {
                     for (int f = 0; f < n_fns; ++f)
                       out[static_cast<std::size_t>(rec) * n_fns + f] =
                           fns[f].evaluate(x, layout);
                   });
  };
  return ensemble_reduce(path, deterministic ? 1 : s.n_paths_continuous, times,
                         n_fns, c.threads);
}

int cmd_simulate(const Overrides& o, const std::string& source,
                 bool trajectory, long record_every) {
  const ExperimentConfig c = load_config(o);
  const QuadraticGaussianProblem problem(
      {c.d, c.seed_problem, c.seed_dataset, c.dataset_size, c.data_mode,
       c.m_mode});
  OutputSink sink = make_sink("simulate", c, o, {source});

  if (trajectory) {
    const Hyper h = make_hyper(c, c.tau);
    const NoiseSource noise(problem, c.noise_mode, c.batch_b0);
    rng::RngStream stream(c.seed_discrete, rng::kSpaceDiscrete, 0);
    const OptState x0 =
        default_initial_state(c.optimizer, problem, c.seed_problem);
    const auto traj = run_discrete(c.optimizer, c.regime, x0, h, problem,
                                   noise, stream, record_every);
    std::ostringstream out;
    out << "# manifest=" << sink.manifest.hash_hex() << "\n";
    write_trajectory_csv(out, traj, c.tau);
    sink.deliver(out.str());
    return 0;
  }

  std::vector<std::string> fn_names;
  const EnsembleStats stats = run_series(c, problem, source, fn_names);
  std::ostringstream out;
  if (o.format == "json")
    out << series_to_json("simulate:" + source, params_json(c), stats,
                          fn_names).dump(2)
        << "\n";
  else
    write_series_csv(out, sink.manifest.hash_hex(), stats, fn_names);
  sink.deliver(out.str());
  return 0;
}

int cmd_weak_error(const Overrides& o) {
  const ExperimentConfig c = load_config(o);
  const QuadraticGaussianProblem problem(
      {c.d, c.seed_problem, c.seed_dataset, c.dataset_size, c.data_mode,
       c.m_mode});
  const WeakErrorSetup setup = make_setup(c, problem, c.tau);
  const WeakErrorResult we = weak_error(setup);
  OutputSink sink = make_sink("weak-error", c, o, {});
  std::ostringstream out;
  if (o.format == "json")
    out << weak_error_to_json("weak-error", params_json(c), we).dump(2) << "\n";
  else
    write_weak_error_csv(out, sink.manifest.hash_hex(), we);
  sink.deliver(out.str());
  return 0;
}

int cmd_sweep(const Overrides& o) {
  const ExperimentConfig c = load_config(o);
  if (c.tau_list.size() < 2)
    throw ValidationError("sweep needs tau_list with at least 2 values");
  const QuadraticGaussianProblem problem(
      {c.d, c.seed_problem, c.seed_dataset, c.dataset_size, c.data_mode,
       c.m_mode});
  const WeakErrorSetup setup = make_setup(c, problem, c.tau_list.front());
  SweepHooks hooks;
  hooks.hyper = [&](double tau) { return make_hyper(c, tau); };
  hooks.warmup = [&](double tau) { return adam_warmup(c, tau); };
  hooks.paths_d = [&](double tau) {
    return c.paths_discrete > 0 ? c.paths_discrete
                                : default_paths(c.order, c.horizon_T, tau);
  };
  hooks.paths_c = [&](double tau) {
    return c.paths_continuous > 0 ? c.paths_continuous
                                  : default_paths(c.order, c.horizon_T, tau);
  };
  const SweepResult sweep = slope_sweep(setup, c.tau_list, hooks, c.stderr_gate);

  OutputSink sink = make_sink("sweep", c, o, {});
  std::ostringstream out;
  if (o.format == "json")
    out << sweep_to_json("sweep", params_json(c), sweep).dump(2) << "\n";
  else
    write_sweep_csv(out, sink.manifest.hash_hex(), sweep);
  sink.deliver(out.str());
  for (const auto& sr : sweep.series) {
    std::printf("%s slope=%.3f stderr=%.3f%s\n", sr.fn_name.c_str(),
                sr.fit ? sr.fit->slope : std::nan(""),
                sr.fit ? sr.fit->slope_stderr : std::nan(""),
                sr.flagged ? " flagged=1" : "");
  }
  return 0;
}

int cmd_toy(const Overrides& o, const std::string& xi, long n, long replicas) {
  ToyNoiseConfig cfg;
  if (xi == "normal") cfg.xi_law = XiLaw::StandardNormal;
  else if (xi == "uniform") cfg.xi_law = XiLaw::Uniform;
  else throw ValidationError("--xi: normal|uniform");
  cfg.n = n;
  const ToyStats stats =
      toy_tests(cfg, replicas, o.seed_set ? o.seed : 2024, o.threads);
  ExperimentConfig c;
  OutputSink sink = make_sink("toy", c, o, {xi});
  std::ostringstream out;
  out << toy_to_json(stats).dump(2) << "\n";
  sink.deliver(out.str());
  return 0;
}

int cmd_moments(const Overrides& o, long samples) {
  ExperimentConfig c = load_config(o);
  if (c.tau_list.empty()) {
    c.tau_list = {0.25, 0.125, 0.0625};
    validate_config(c);
  }
  const QuadraticGaussianProblem problem(
      {c.d, c.seed_problem, c.seed_dataset, c.dataset_size, c.data_mode,
       c.m_mode});
  OutputSink sink = make_sink("moments", c, o, {});

  std::vector<double> taus, first_diffs, second_diffs;
  nlohmann::json rows = nlohmann::json::array();
  for (double tau : c.tau_list) {
    const Hyper h = make_hyper(c, tau);
    OptState s = default_initial_state(c.optimizer, problem, c.seed_problem);
    if (c.optimizer == Optimizer::Adam)
      s = adam_second_iterate(c.regime, s, h, problem);
    const MomentCheckResult r = one_step_moment_check(
        c.optimizer, c.regime, c.order, s, h, problem, samples,
        c.seed_discrete, c.threads, c.generalized_lambda);
    taus.push_back(tau);
    first_diffs.push_back(r.max_mean_diff);
    second_diffs.push_back(r.max_second_diff);
    rows.push_back({{"tau", tau},
                    {"max_first_moment_diff", r.max_mean_diff},
                    {"max_first_moment_diff_over_se", r.max_mean_diff_over_se},
                    {"max_second_moment_diff", r.max_second_diff},
                    {"analytic_gap_over_se", r.max_analytic_gap_over_se}});
    std::printf("tau=%-10g first=%-12.5g second=%-12.5g analytic_gap=%.2fse\n",
                tau, r.max_mean_diff, r.max_second_diff,
                r.max_analytic_gap_over_se);
  }
  nlohmann::json report{{"experiment", "moments"},
                        {"params", params_json(c)},
                        {"rows", rows}};
  if (taus.size() >= 2) {
    const LineFit f1 = loglog_slope(taus, first_diffs);
    const LineFit f2 = loglog_slope(taus, second_diffs);
    report["slope"] = f1.slope;
    report["stderr"] = f1.slope_stderr;
    report["second_moment_slope"] = f2.slope;
    std::printf("first_moment slope=%.3f stderr=%.3f\n", f1.slope,
                f1.slope_stderr);
    std::printf("second_moment slope=%.3f stderr=%.3f\n", f2.slope,
                f2.slope_stderr);
  }
  if (!o.out_path.empty()) {
    std::ostringstream out;
    out << report.dump(2) << "\n";
    sink.deliver(out.str());
  }
  return 0;
}

int cmd_gen_problem(const Overrides& o, const std::string& out_file,
                    bool verify) {
  const ExperimentConfig c = load_config(o);
  const QuadraticGaussianProblem problem(
      {c.d, c.seed_problem, c.seed_dataset, c.dataset_size, c.data_mode,
       c.m_mode});
  if (out_file.empty()) throw ValidationError("gen-problem needs --out");
  problem.save_dataset(out_file);
  if (verify) {
    ProblemOptions meta;
    const Matrix stored = QuadraticGaussianProblem::load_dataset(out_file, &meta);
    const QuadraticGaussianProblem regen(
        {meta.d, c.seed_problem, meta.data_seed, meta.dataset_size,
         DataMode::Empirical, c.m_mode});
    if (stored.rows() != regen.dataset().rows() ||
        stored.cols() != regen.dataset().cols() ||
        std::memcmp(stored.data(), regen.dataset().data(),
                    sizeof(double) * stored.size()) != 0)
      throw Error("gen-problem: regeneration is not bit-identical");
    std::cout << "verified: regeneration bit-identical\n";
  }
  std::cout << "dataset written to " << out_file << " (d=" << c.d
            << ", samples=" << c.dataset_size << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation lab for adaptive-SGD scaling limits"};
  app.require_subcommand(1);
  Overrides o;

  auto* sim = app.add_subcommand("simulate", "ensemble mean time series");
  std::string source = "discrete";
  bool trajectory = false;
  long record_every = 1;
  add_common(sim, o);
  sim->add_option("--source", source, "discrete|continuous")
      ->check(CLI::IsMember({"discrete", "continuous"}));
  sim->add_flag("--trajectory", trajectory, "dump a single discrete path");
  sim->add_option("--record-every", record_every, "trajectory record stride");

  auto* werr = app.add_subcommand("weak-error", "single-tau weak error");
  add_common(werr, o);

  auto* sweep = app.add_subcommand("sweep", "weak error over tau_list + slope");
  add_common(sweep, o);

  auto* toy = app.add_subcommand("toy", "two-driver invariance statistics");
  std::string xi = "normal";
  long toy_n = 10000, toy_replicas = 1000;
  toy->add_option("--xi", xi, "normal|uniform");
  toy->add_option("--n", toy_n, "steps per path");
  toy->add_option("--replicas", toy_replicas, "independent paths");
  add_common(toy, o);

  auto* moments = app.add_subcommand("moments", "one-step moment comparison");
  long samples = 1000000;
  moments->add_option("--samples", samples, "Monte-Carlo samples per tau");
  add_common(moments, o);

  auto* gen = app.add_subcommand("gen-problem", "write the dataset file");
  bool verify = false;
  gen->add_flag("--verify", verify, "check bit-identical regeneration");
  add_common(gen, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, source, trajectory, record_every);
    if (werr->parsed()) return cmd_weak_error(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (toy->parsed()) return cmd_toy(o, xi, toy_n, toy_replicas);
    if (moments->parsed()) return cmd_moments(o, samples);
    if (gen->parsed()) return cmd_gen_problem(o, o.out_path, verify);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NonFiniteState& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
